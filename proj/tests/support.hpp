#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dems/linalg.hpp"

namespace testing {

using dems::Matrix;
using dems::Vector;

// Small hand-rolled generators for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

    Vector vector(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

    Matrix matrix(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }

    Matrix spd(Eigen::Index n) {
        const Matrix a = matrix(n, n);
        return a * a.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
    }

    // Hurwitz matrix: random part shifted left of its spectral abscissa.
    Matrix stable(Eigen::Index n) {
        Matrix a = matrix(n, n);
        const double shift = a.eigenvalues().real().maxCoeff() + uniform(0.2, 1.0);
        a -= shift * Matrix::Identity(n, n);
        return a;
    }

private:
    std::mt19937_64 eng_;
};

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace testing

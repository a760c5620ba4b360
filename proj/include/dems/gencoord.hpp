#pragma once

#include <vector>

#include "dems/linalg.hpp"

namespace dems {

/// Continuous-time LTI plant x' = A x + B v + w, y = C x + z.
struct LinearPlant {
    Matrix A; // n x n
    Matrix B; // n x r
    Matrix C; // m x n

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index r() const { return B.cols(); }
    Eigen::Index m() const { return C.rows(); }

    /// Throws ValidationError on inconsistent shapes or non-finite entries.
    void validate() const;

    bool operator==(const LinearPlant&) const = default;
};

/// A signal and its first `order` time derivatives, stored derivative-major:
/// [u, u', u'', ...] with each block of length base_dim.
class GeneralizedVector {
public:
    GeneralizedVector() = default;
    GeneralizedVector(Eigen::Index base_dim, int order);
    GeneralizedVector(Eigen::Index base_dim, int order, Vector values);

    Eigen::Index base_dim() const { return base_dim_; }
    int order() const { return order_; }
    const Vector& values() const { return values_; }
    Vector& values() { return values_; }

    auto block(int k) const { return values_.segment(k * base_dim_, base_dim_); }
    auto block(int k) { return values_.segment(k * base_dim_, base_dim_); }

private:
    Eigen::Index base_dim_ = 0;
    int order_ = 0;
    Vector values_;
};

/// Kronecker-lifted plant for embedding orders p (states) and d (inputs).
struct GeneralizedSystem {
    LinearPlant plant;
    int p = 0;
    int d = 0;
    Matrix A_gen; // (p+1)n x (p+1)n
    Matrix B_gen; // (p+1)n x (d+1)r, zero below derivative slot d
    Matrix C_gen; // (p+1)m x (p+1)n
    Matrix Dx;    // (p+1)n x (p+1)n shift
};

/// Identity blocks on the first block superdiagonal.
Matrix shift_matrix(int p, Eigen::Index block_dim);

GeneralizedSystem lift_system(const LinearPlant& plant, int p, int d);

/// Derivatives at window[center] from a window of samples (rows = samples,
/// cols = channels) spaced dt apart. Uses the inverse of the Taylor matrix
/// E(i,j) = ((i-center) dt)^j / j!; least squares when the window is longer
/// than q+1. Exact for polynomials of degree <= q.
GeneralizedVector taylor_embed(const Matrix& window, double dt, int q, int center);

/// Taylor reconstruction of the window samples from a derivative vector.
Matrix taylor_reconstruct(const GeneralizedVector& derivs, Eigen::Index window_len, double dt,
                          int center);

/// Embeds every sample of a sequence (rows = time) with a centered window of
/// q+1 samples. Near the ends the window is shifted to stay in range.
std::vector<GeneralizedVector> embed_sequence(const Matrix& samples, double dt, int q);

} // namespace dems

#include "dems/linalg.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "dems/errors.hpp"

namespace dems {

Matrix kron(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

Matrix expm(const Matrix& a) {
    require(a.rows() == a.cols(), "expm: matrix must be square");
    Matrix result = a.exp();
    return result;
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_positive_definite(const Matrix& m) {
    if (!is_symmetric(m, 1e-9) || !m.allFinite()) {
        return false;
    }
    Eigen::LLT<Matrix> llt(m);
    return llt.info() == Eigen::Success;
}

double log_det_spd(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw ConditioningError("log_det_spd: matrix is not positive definite");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

namespace {

// phi1(X) = sum_k X^k / (k+1)!, evaluated on X / 2^j and doubled back up
// through phi1(2Y) = (I + e^Y) phi1(Y) / 2.
Matrix phi1_series(const Matrix& x) {
    const Eigen::Index dim = x.rows();
    const Matrix identity = Matrix::Identity(dim, dim);
    const double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
    int halvings = 0;
    if (norm > 0.5) {
        halvings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Matrix y = x / std::ldexp(1.0, halvings);

    Matrix phi = identity;
    Matrix expo = identity + y;
    Matrix power = y; // y^k / k!
    for (int k = 1; k < 200; ++k) {
        const Matrix phi_term = power / static_cast<double>(k + 1);
        phi += phi_term;
        power = power * y / static_cast<double>(k + 1);
        expo += power;
        const double term_size = phi_term.cwiseAbs().maxCoeff();
        if (term_size <= 1e-14 * phi.cwiseAbs().maxCoeff() &&
            power.cwiseAbs().maxCoeff() <= 1e-14 * expo.cwiseAbs().maxCoeff()) {
            break;
        }
    }
    for (int i = 0; i < halvings; ++i) {
        phi = 0.5 * (identity + expo) * phi;
        expo = expo * expo;
    }
    return phi;
}

} // namespace

ExactDiscretization discretize_exact(const Matrix& a, double dt, IntegralPath path) {
    require(a.rows() == a.cols(), "discretize_exact: matrix must be square");
    require(dt > 0.0 && std::isfinite(dt), "discretize_exact: dt must be positive");

    ExactDiscretization out;
    const Matrix scaled = a * dt;
    out.transition = expm(scaled);
    if (!out.transition.allFinite()) {
        throw DivergenceError("matrix exponential is not finite; dt too large for the system scale", 0);
    }
    const Eigen::Index dim = a.rows();

    bool use_series = path == IntegralPath::Series;
    Eigen::PartialPivLU<Matrix> lu;
    if (path != IntegralPath::Series) {
        lu.compute(a);
        const bool singular = !(lu.rcond() >= 1e-12);
        if (singular && path == IntegralPath::Inverse) {
            throw ConditioningError("discretize_exact: matrix is singular, inverse path unavailable");
        }
        use_series = singular;
    }

    if (use_series) {
        out.input_gain = dt * phi1_series(scaled);
        out.used_series = true;
    } else {
        out.input_gain = lu.solve(out.transition - Matrix::Identity(dim, dim));
    }
    return out;
}

} // namespace dems

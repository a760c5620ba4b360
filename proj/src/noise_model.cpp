#include "dems/noise_model.hpp"

#include <cmath>
#include <random>

#include "dems/errors.hpp"
#include "dems/rng.hpp"

namespace dems {

void NoiseSpec::validate() const {
    require(s > 0.0 && std::isfinite(s), "noise: smoothness s must be positive");
    require(is_positive_definite(prec_w), "noise: process precision must be symmetric positive definite");
    require(is_positive_definite(prec_z), "noise: measurement precision must be symmetric positive definite");
}

Matrix GeneralizedPrecision::full() const {
    const Eigen::Index nz = block_z.rows();
    const Eigen::Index nw = block_w.rows();
    Matrix out = Matrix::Zero(nz + nw, nz + nw);
    out.topLeftCorner(nz, nz) = block_z;
    out.bottomRightCorner(nw, nw) = block_w;
    return out;
}

std::vector<double> autocorr_derivatives(double s, int max_order) {
    require(s > 0.0 && std::isfinite(s), "autocorr_derivatives: s must be positive");
    require(max_order >= 0, "autocorr_derivatives: max_order must be non-negative");
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
    // rho^{(2k)}(0) = (-1)^k (2k-1)!! / (2 s^2)^k
    const double a = 1.0 / (2.0 * s * s);
    double value = 1.0;
    for (int k = 0; 2 * k <= max_order; ++k) {
        if (k > 0) {
            value *= -static_cast<double>(2 * k - 1) * a;
        }
        out[static_cast<std::size_t>(2 * k)] = value;
    }
    return out;
}

Matrix derivative_covariance(int p, double s) {
    require(p >= 0, "derivative_covariance: order must be non-negative");
    const auto rho = autocorr_derivatives(s, 2 * p);
    Matrix c(p + 1, p + 1);
    for (int i = 0; i <= p; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        for (int j = 0; j <= p; ++j) {
            c(i, j) = sign * rho[static_cast<std::size_t>(i + j)];
        }
    }
    return c;
}

namespace {

// S at s = 1 and its log-determinant. The s-dependence is the congruence
// S(s) = D S(1) D with D = diag(s^i), so only the unit matrix is inverted.
struct UnitSmoothness {
    Matrix S;
    double log_det;
};

UnitSmoothness unit_smoothness(int p) {
    const Matrix cov = derivative_covariance(p, 1.0);
    Eigen::LDLT<Matrix> ldlt(cov);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw ConditioningError("smoothness_precision: derivative covariance is not positive definite");
    }
    Matrix s = ldlt.solve(Matrix::Identity(p + 1, p + 1));
    s = 0.5 * (s + s.transpose());
    return {s, -ldlt.vectorD().array().log().sum()};
}

} // namespace

SmoothnessPrecision smoothness_precision(int p, double s) {
    require(p >= 0, "smoothness_precision: order must be non-negative");
    require(s > 0.0 && std::isfinite(s), "smoothness_precision: s must be positive");
    const UnitSmoothness unit = unit_smoothness(p);

    SmoothnessPrecision sp;
    sp.p = p;
    sp.s = s;
    sp.S.resize(p + 1, p + 1);
    sp.S_s.resize(p + 1, p + 1);
    sp.S_ss.resize(p + 1, p + 1);
    for (int i = 0; i <= p; ++i) {
        for (int j = 0; j <= p; ++j) {
            const int e = i + j;
            const double v = unit.S(i, j) * std::pow(s, e);
            sp.S(i, j) = v;
            sp.S_s(i, j) = e == 0 ? 0.0 : e * unit.S(i, j) * std::pow(s, e - 1);
            sp.S_ss(i, j) = e < 2 ? 0.0 : e * (e - 1) * unit.S(i, j) * std::pow(s, e - 2);
        }
    }
    if (!sp.S.allFinite() || !sp.S_s.allFinite() || !sp.S_ss.allFinite()) {
        throw ConditioningError("smoothness_precision: S overflows for s = " + std::to_string(s));
    }
    for (int i = 0; i <= p; ++i) {
        if (!(sp.S(i, i) > 0.0)) {
            throw ConditioningError("smoothness_precision: S underflows for s = " + std::to_string(s));
        }
    }
    sp.log_det = unit.log_det + static_cast<double>(p * (p + 1)) * std::log(s);
    return sp;
}

GeneralizedPrecision generalized_precision(const SmoothnessPrecision& sp, const Matrix& prec_z,
                                           const Matrix& prec_w) {
    require(is_positive_definite(prec_z), "generalized_precision: measurement precision must be SPD");
    require(is_positive_definite(prec_w), "generalized_precision: process precision must be SPD");
    require(sp.S.rows() == sp.p + 1, "generalized_precision: smoothness matrix has wrong order");

    GeneralizedPrecision gp;
    gp.smooth = sp;
    gp.prec_z = prec_z;
    gp.prec_w = prec_w;
    gp.block_z = kron(sp.S, prec_z);
    gp.block_w = kron(sp.S, prec_w);
    gp.block_z_s = kron(sp.S_s, prec_z);
    gp.block_w_s = kron(sp.S_s, prec_w);
    gp.block_z_ss = kron(sp.S_ss, prec_z);
    gp.block_w_ss = kron(sp.S_ss, prec_w);
    const double order = sp.p + 1;
    gp.log_det = order * (log_det_spd(prec_z) + log_det_spd(prec_w)) +
                 static_cast<double>(prec_z.rows() + prec_w.rows()) * sp.log_det;
    return gp;
}

LogDetGrads log_det_precision_grads(int p, double s, Eigen::Index n, Eigen::Index m) {
    require(s > 0.0 && std::isfinite(s), "log_det_precision_grads: s must be positive");
    require(p >= 0, "log_det_precision_grads: order must be non-negative");
    const double k = static_cast<double>(p) * (p + 1) * static_cast<double>(n + m);
    return {k / s, -k / (s * s)};
}

double log_det_S(int p, double s) {
    require(s > 0.0 && std::isfinite(s), "log_det_S: s must be positive");
    return smoothness_precision(p, s).log_det;
}

Vector gaussian_kernel(double s, double dt) {
    require(s > 0.0 && dt > 0.0, "gaussian_kernel: s and dt must be positive");
    const auto half = static_cast<Eigen::Index>(std::floor(6.0 * s / dt));
    Vector taps(2 * half + 1);
    for (Eigen::Index i = -half; i <= half; ++i) {
        const double t = static_cast<double>(i) * dt;
        taps(i + half) = std::exp(-t * t / (2.0 * s * s));
    }
    return taps / taps.norm();
}

Matrix generate_colored_noise(std::size_t count, double dt, const NoiseSpec& noise,
                              NoiseChannel which) {
    require(count >= 1, "generate_colored_noise: count must be at least 1");
    require(dt > 0.0 && std::isfinite(dt), "generate_colored_noise: dt must be positive");
    require(noise.s > 0.0, "generate_colored_noise: s must be positive");
    const Matrix& precision = which == NoiseChannel::Process ? noise.prec_w : noise.prec_z;
    require(is_positive_definite(precision), "generate_colored_noise: precision must be SPD");

    const Matrix cov = precision.inverse();
    Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
    if (llt.info() != Eigen::Success) {
        throw ValidationError("generate_colored_noise: covariance is not positive definite");
    }
    const Matrix chol = llt.matrixL();

    const Vector taps = gaussian_kernel(noise.s, dt);
    const Eigen::Index width = taps.size();
    const Eigen::Index dim = precision.rows();
    const auto rows = static_cast<Eigen::Index>(count);
    const Eigen::Index raw_rows = rows + width - 1;

    std::mt19937_64 gen(derive_seed(noise.seed, which == NoiseChannel::Process ? 1 : 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix white(raw_rows, dim);
    for (Eigen::Index i = 0; i < raw_rows; ++i) {
        Vector xi(dim);
        for (Eigen::Index c = 0; c < dim; ++c) {
            xi(c) = normal(gen);
        }
        white.row(i) = (chol * xi).transpose();
    }

    Matrix out = Matrix::Zero(rows, dim);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < width; ++k) {
            out.row(i) += taps(k) * white.row(i + k);
        }
    }
    return out;
}

} // namespace dems

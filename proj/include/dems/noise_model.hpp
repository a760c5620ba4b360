#pragma once

#include <cstdint>
#include <vector>

#include "dems/linalg.hpp"

namespace dems {

/// Colored noise description: Gaussian kernel width s and marginal
/// precisions of the process (n x n) and measurement (m x m) noise.
struct NoiseSpec {
    double s = 0.5;
    Matrix prec_w;
    Matrix prec_z;
    std::uint64_t seed = 0;

    void validate() const;
};

/// S(s) with its first two s-derivatives. Entry (i,j) scales as s^{i+j}.
struct SmoothnessPrecision {
    int p = 0;
    double s = 0.0;
    Matrix S;
    Matrix S_s;
    Matrix S_ss;
    double log_det = 0.0; // ln |S|
};

/// Block-diagonal generalized precision [S (x) Pz, 0; 0, S (x) Pw] and its
/// s-derivatives. The underlying S and marginal precisions are retained so
/// quadratic forms can be evaluated without materializing the blocks.
struct GeneralizedPrecision {
    SmoothnessPrecision smooth;
    Matrix prec_z;
    Matrix prec_w;
    Matrix block_z;
    Matrix block_w;
    Matrix block_z_s;
    Matrix block_w_s;
    Matrix block_z_ss;
    Matrix block_w_ss;
    double log_det = 0.0; // ln |Pi~|

    int p() const { return smooth.p; }
    Eigen::Index n() const { return prec_w.rows(); }
    Eigen::Index m() const { return prec_z.rows(); }

    /// Dense (p+1)(m+n) square matrix.
    Matrix full() const;
};

/// rho^{(k)}(0) for k = 0..max_order, rho(h) = exp(-h^2 / (4 s^2)).
std::vector<double> autocorr_derivatives(double s, int max_order);

/// Cov(u^{(i)}, u^{(j)}) = (-1)^i rho^{(i+j)}(0) for unit-variance noise.
Matrix derivative_covariance(int p, double s);

SmoothnessPrecision smoothness_precision(int p, double s);

GeneralizedPrecision generalized_precision(const SmoothnessPrecision& sp, const Matrix& prec_z,
                                           const Matrix& prec_w);

struct LogDetGrads {
    double first = 0.0;
    double second = 0.0;
};

/// d/ds and d2/ds2 of ln|Pi~|: (K(n+m)/s, -K(n+m)/s^2) with K = p(p+1).
LogDetGrads log_det_precision_grads(int p, double s, Eigen::Index n, Eigen::Index m);

double log_det_S(int p, double s);

enum class NoiseChannel { Process, Measurement };

/// Samples (rows = time) of white Gaussian noise with covariance
/// inverse(precision), convolved per channel with exp(-t^2 / (2 s^2))
/// sampled on the dt grid, truncated at +-6s and scaled to unit L2 energy.
Matrix generate_colored_noise(std::size_t count, double dt, const NoiseSpec& noise,
                              NoiseChannel which);

/// Discrete kernel taps used by generate_colored_noise.
Vector gaussian_kernel(double s, double dt);

} // namespace dems

#pragma once

#include <vector>

#include "dems/gencoord.hpp"
#include "dems/simlab.hpp"

namespace dems {

/// Sampled-data model used by the Kalman-type baselines.
struct DiscretePlant {
    Matrix Ad;
    Matrix Bd;
    Matrix C;
    Matrix Qd; // per-step process covariance
    Matrix Rd; // measurement covariance
    double dt = 0.0;
};

/// Ad = e^{A dt}, Bd = integral_0^dt e^{A tau} d tau B, Qd = Q dt, Rd = R.
DiscretePlant discretize_lti(const LinearPlant& plant, double dt, const Matrix& process_cov,
                             const Matrix& measurement_cov);

/// Scalar AR(q) model per channel: w_k = sum_i a_i w_{k-i} + xi_k.
struct ArModel {
    int order = 0;
    Matrix coeffs;         // channels x order, row c holds a_1..a_q of channel c
    Vector innovation_var; // per channel

    Eigen::Index channels() const { return coeffs.rows(); }
    /// Largest |eigenvalue| of the per-channel companion matrices.
    double spectral_radius() const;
};

/// Yule-Walker fit from autocovariances gamma(0..q) of each channel
/// (rows = channels, cols = lags).
ArModel fit_ar(const Matrix& autocovariance, int order);

/// Autocovariance of the Gaussian-kernel colored process at lags k dt,
/// gamma(k) = var * exp(-(k dt)^2 / (4 s^2)).
Matrix gaussian_autocovariance(const Vector& variances, double s, double dt, int max_lag);

struct KalmanOptions {
    double initial_cov = 1.0; // P0 = initial_cov * I, x0 = 0
};

TrialResult run_kf(const Dataset& data, const DiscretePlant& dplant, KalmanOptions opts = {});

/// Kalman filter on the state augmented with `order` lags of the process
/// noise (companion form). Measurement noise is treated as white.
TrialResult run_sa(const Dataset& data, const DiscretePlant& dplant, const ArModel& ar,
                   KalmanOptions opts = {});

/// Kalman filter carrying the state/noise cross-covariance of AR(1)
/// process noise.
TrialResult run_smikf(const Dataset& data, const DiscretePlant& dplant, const ArModel& ar,
                      KalmanOptions opts = {});

/// Dimension of the augmented state used by run_sa.
Eigen::Index augmented_dimension(Eigen::Index n, int order);

} // namespace dems

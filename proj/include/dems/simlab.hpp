#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dems/gencoord.hpp"
#include "dems/noise_model.hpp"
#include "dems/observers.hpp"

namespace dems {

struct DatasetMeta {
    std::string scenario;
    double s_real = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    double log_prec_w = std::numeric_limits<double>::quiet_NaN();
    double log_prec_z = std::numeric_limits<double>::quiet_NaN();
};

/// Uniformly sampled time series. Rows are samples.
struct Dataset {
    double dt = 0.0;
    Vector times;
    Matrix y; // N x m
    Matrix v; // N x r
    std::optional<Matrix> x; // N x n truth
    std::optional<Matrix> w; // N x n process noise at sample times
    std::optional<Matrix> z; // N x m measurement noise
    DatasetMeta meta;

    Eigen::Index size() const { return times.size(); }
    void validate() const;
};

struct TrialResult {
    Matrix estimates;            // N x n, order-0 block of x~
    Matrix gen_estimates;        // N x (p+1)n, full x~ (empty for KF-type filters)
    std::vector<double> s_traj;  // empty for fixed-s methods
    std::vector<double> F_traj;  // empty for KF-type filters
    std::optional<double> sse;
};

/// Input law evaluated on the simulation sub-grid: v(t, x).
using InputFn = std::function<Vector(double t, const Vector& x)>;

struct Scenario {
    std::string name;
    LinearPlant plant;
    InputFn input;
    double dt = 0.1;
    double T = 32.0;
    double log_prec_w = 6.0;
    double log_prec_z = 6.0;
    int p = 6;
    int d = 2;
};

/// Paper working example: n = 2, r = 1, m = 4.
LinearPlant scenario_paper_system();

/// Linearized roll dynamics with four motor inputs and roll measurement.
LinearPlant scenario_quadrotor();

/// Gaussian bump v(t) = exp(-0.25 (t - 12)^2).
Vector gaussian_bump_input(double t);

/// Scenario with its default input law and experiment settings.
/// Known names: "paper_system", "quadrotor".
Scenario make_scenario(const std::string& name);

/// Isotropic precision e^{log_prec} I.
Matrix isotropic_precision(double log_prec, Eigen::Index dim);

/// Integrates the plant on a dt/10 sub-grid with exact propagation of the
/// deterministic part and piecewise-constant colored process noise, then
/// samples outputs (with colored measurement noise) every dt.
Dataset simulate_lti(const LinearPlant& plant, const InputFn& input, const NoiseSpec& noise,
                     double T, double dt, std::uint64_t seed, const Vector& x0);

/// Sum of squared differences over time and components.
double sse(const Matrix& estimates, const Matrix& truth);

double median(std::vector<double> values);

} // namespace dems

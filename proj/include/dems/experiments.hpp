#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dems/baselines.hpp"
#include "dems/simlab.hpp"

namespace dems {

enum class Method { DEMs, DEMFixed, KF, SA, SMIKF };

std::string method_name(Method m);
/// Accepts record names (DEMs, DEM-fixed, KF, SA, SMIKF) and CLI names
/// (dems, dem, kf, sa, smikf).
Method parse_method(const std::string& name);

/// Shared knobs for every experiment.
struct StudySettings {
    std::string scenario = "paper_system";
    double T = 32.0;
    double dt = 0.1;
    int p = 6;
    int d = 2;
    double k_x = 1.0;
    double s_init = 0.001;
    double s_min = 1e-4;
    double s_max = 1.0;
    SmoothnessPrior prior;
    double log_prec_w = 6.0;
    double log_prec_z = 6.0;
    int sa_order = 6;
    std::uint64_t master_seed = 1;
    int jobs = 1;
    bool timing = false;
};

/// Settings populated from a scenario's defaults.
StudySettings default_settings(const Scenario& scenario);

ObserverConfig make_observer_config(const StudySettings& settings, const LinearPlant& plant);

Dataset simulate_scenario(const Scenario& scenario, const StudySettings& settings, double s_real,
                          std::uint64_t seed);

/// Runs one estimator on a dataset. `s_value` is the smoothness given to
/// DEM-fixed and used to calibrate the AR models of SA and SMIKF.
TrialResult run_method(Method method, const LinearPlant& plant, const Dataset& data,
                       const StudySettings& settings, double s_value, int p_override = -1);

struct BenchmarkRecord {
    std::string scenario;
    std::string method;
    double s_real = 0.0;
    std::uint64_t seed = 0;
    int p = 0;
    double sse = 0.0; // NaN when the cell failed
    double runtime_s = 0.0;
    std::optional<double> s_assumed;
    std::string error;

    bool operator==(const BenchmarkRecord&) const = default;
};

/// Runs fn(i) for i in [0, count) on `jobs` workers. Results must be
/// written by index; scheduling never affects them.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

/// Dataset seed for (s index, seed index) under a master seed.
std::uint64_t cell_seed(std::uint64_t master, std::size_t s_index, std::size_t seed_index);

struct BenchmarkConfig {
    StudySettings settings;
    std::optional<Scenario> scenario; // overrides the scenario named in settings
    std::vector<double> s_values{0.1, 0.3, 0.5, 0.7, 0.9};
    int seeds = 10;
    std::vector<Method> methods{Method::DEMs, Method::KF, Method::SA, Method::SMIKF};
};

std::vector<BenchmarkRecord> benchmark_suite(const BenchmarkConfig& cfg);

struct EmbeddingSweepConfig {
    StudySettings settings;
    std::optional<Scenario> scenario; // overrides the scenario named in settings
    std::vector<int> p_values{0, 1, 2, 3, 4, 5};
    std::vector<double> s_values{0.1, 0.3, 0.5, 0.7, 0.9};
    int seeds = 5;
};

std::vector<BenchmarkRecord> embedding_sweep(const EmbeddingSweepConfig& cfg);

struct MismatchSweepConfig {
    StudySettings settings;
    std::optional<Scenario> scenario; // overrides the scenario named in settings
    std::vector<double> assumed_s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> s_real{0.1, 0.3, 0.5};
    int seeds = 5;
};

struct MismatchSweepResult {
    std::vector<BenchmarkRecord> dem;       // one per (assumed s, s_real, seed)
    std::vector<BenchmarkRecord> kf;        // one per (s_real, seed)
};

MismatchSweepResult mismatch_sweep(const MismatchSweepConfig& cfg);

/// Median SSE of the records matching a predicate.
double median_sse(const std::vector<BenchmarkRecord>& records,
                  const std::function<bool(const BenchmarkRecord&)>& pick);

struct LandscapeCurve {
    double t_eval = 0.0;
    std::vector<double> s;
    std::vector<double> F;
    double argmax_s = 0.0;
    int interior_maxima = 0;
};

/// Free energy at time t_eval of a fixed-s DEM run, for every s on the grid.
std::vector<LandscapeCurve> fe_landscape(const LinearPlant& plant, const Dataset& data,
                                         const ObserverConfig& cfg, const std::vector<double>& s_grid,
                                         const std::vector<double>& t_evals);

/// Uniform grid lo, lo+step, ..., <= hi.
std::vector<double> make_grid(double lo, double hi, double step);

struct QuadrantSample {
    double s = 0.0;
    double first = 0.0;  // eps' Pi_s eps
    double second = 0.0; // eps' Pi_ss eps
};

struct QuadrantResult {
    std::array<std::size_t, 4> counts{}; // quadrants I..IV of (first, second)
    std::size_t on_axis = 0;
    std::vector<QuadrantSample> samples;
};

/// Random (eps, s) with eps uniform in the Euclidean unit ball, s uniform in (0, 1],
/// unit noise precisions. Tallies the signs of the two precision slopes.
QuadrantResult quadrant_analysis(std::size_t sample_count, std::uint64_t seed, int p,
                                 Eigen::Index n, Eigen::Index m, bool keep_samples = false);

struct StationaryCheck {
    std::size_t trials = 0;
    std::size_t trials_with_root = 0;
    std::size_t roots = 0;
    std::size_t curvature_violations = 0; // F_ss >= 0 at a root
    std::size_t slope_violations = 0;     // eps' Pi_s eps <= 0 at a root
};

/// For random eps (uniform in the Euclidean unit ball) locates every root of F_s on
/// (dt, 1) by grid bracketing and bisection and checks that each is a
/// maximum with a positive precision slope.
StationaryCheck check_stationary_points(std::size_t trials, std::uint64_t seed, int p,
                                        Eigen::Index n, Eigen::Index m, double log_prec, double dt,
                                        int grid_points = 400);

} // namespace dems

#include "dems/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "dems/errors.hpp"
#include "dems/free_energy.hpp"
#include "dems/rng.hpp"

namespace dems {

std::string method_name(Method m) {
    switch (m) {
    case Method::DEMs: return "DEMs";
    case Method::DEMFixed: return "DEM-fixed";
    case Method::KF: return "KF";
    case Method::SA: return "SA";
    case Method::SMIKF: return "SMIKF";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "DEMs" || name == "dems") return Method::DEMs;
    if (name == "DEM-fixed" || name == "dem") return Method::DEMFixed;
    if (name == "KF" || name == "kf") return Method::KF;
    if (name == "SA" || name == "sa") return Method::SA;
    if (name == "SMIKF" || name == "smikf") return Method::SMIKF;
    throw ValidationError("unknown method '" + name + "'");
}

StudySettings default_settings(const Scenario& scenario) {
    StudySettings s;
    s.scenario = scenario.name;
    s.T = scenario.T;
    s.dt = scenario.dt;
    s.p = scenario.p;
    s.d = scenario.d;
    s.log_prec_w = scenario.log_prec_w;
    s.log_prec_z = scenario.log_prec_z;
    return s;
}

ObserverConfig make_observer_config(const StudySettings& settings, const LinearPlant& plant) {
    ObserverConfig cfg;
    cfg.p = settings.p;
    cfg.d = std::min(settings.d, settings.p);
    cfg.k_x = settings.k_x;
    cfg.s_init = settings.s_init;
    cfg.s_min = settings.s_min;
    cfg.s_max = settings.s_max;
    cfg.dt = settings.dt;
    cfg.prior = settings.prior;
    cfg.prec_w = isotropic_precision(settings.log_prec_w, plant.n());
    cfg.prec_z = isotropic_precision(settings.log_prec_z, plant.m());
    return cfg;
}

Dataset simulate_scenario(const Scenario& scenario, const StudySettings& settings, double s_real,
                          std::uint64_t seed) {
    NoiseSpec noise;
    noise.s = s_real;
    noise.prec_w = isotropic_precision(settings.log_prec_w, scenario.plant.n());
    noise.prec_z = isotropic_precision(settings.log_prec_z, scenario.plant.m());
    noise.seed = seed;
    Dataset data = simulate_lti(scenario.plant, scenario.input, noise, settings.T, settings.dt, seed,
                                Vector::Zero(scenario.plant.n()));
    data.meta.scenario = scenario.name;
    data.meta.s_real = s_real;
    data.meta.seed = seed;
    data.meta.log_prec_w = settings.log_prec_w;
    data.meta.log_prec_z = settings.log_prec_z;
    return data;
}

TrialResult run_method(Method method, const LinearPlant& plant, const Dataset& data,
                       const StudySettings& settings, double s_value, int p_override) {
    StudySettings local = settings;
    if (p_override >= 0) {
        local.p = p_override;
    }
    switch (method) {
    case Method::DEMs:
        return run_dems(plant, data, make_observer_config(local, plant));
    case Method::DEMFixed:
        return run_dem_fixed_s(plant, data, make_observer_config(local, plant), s_value);
    default:
        break;
    }

    const Matrix q = isotropic_precision(-local.log_prec_w, plant.n());
    const Matrix r = isotropic_precision(-local.log_prec_z, plant.m());
    const DiscretePlant dplant = discretize_lti(plant, local.dt, q, r);
    if (method == Method::KF) {
        return run_kf(data, dplant);
    }
    require(s_value > 0.0, "baseline calibration needs a positive smoothness");
    const int order = method == Method::SA ? local.sa_order : 1;
    // Per-step process noise is the colored signal integrated over one step,
    // variance sigma^2 dt^2, correlated across steps by the Gaussian kernel.
    const Matrix gamma = gaussian_autocovariance(dplant.Qd.diagonal() * local.dt, s_value, local.dt, order);
    const ArModel ar = fit_ar(gamma, order);
    if (method == Method::SA) {
        return run_sa(data, dplant, ar);
    }
    return run_smikf(data, dplant, ar);
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        pool.reserve(std::min(workers, count));
        for (std::size_t w = 0; w < std::min(workers, count); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        if (!failed.exchange(true)) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t s_index, std::size_t seed_index) {
    return derive_seed(derive_seed(master, s_index), seed_index);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs one estimator and fills sse/runtime/error; never throws.
void fill_record(BenchmarkRecord& rec, const std::function<TrialResult()>& run, bool timing) {
    const auto start = std::chrono::steady_clock::now();
    try {
        const TrialResult res = run();
        rec.sse = res.sse.value_or(kNaN);
    } catch (const std::exception& e) {
        rec.sse = kNaN;
        rec.error = e.what();
    }
    const auto stop = std::chrono::steady_clock::now();
    rec.runtime_s = timing ? std::chrono::duration<double>(stop - start).count() : 0.0;
}

} // namespace

std::vector<BenchmarkRecord> benchmark_suite(const BenchmarkConfig& cfg) {
    const Scenario scenario = cfg.scenario ? *cfg.scenario : make_scenario(cfg.settings.scenario);
    require(cfg.seeds >= 1, "benchmark: need at least one seed");
    require(!cfg.s_values.empty() && !cfg.methods.empty(), "benchmark: empty grid");
    const std::size_t per_cell = cfg.methods.size();
    const std::size_t cells = cfg.s_values.size() * static_cast<std::size_t>(cfg.seeds);
    std::vector<BenchmarkRecord> records(cells * per_cell);

    parallel_for(cells, cfg.settings.jobs, [&](std::size_t cell) {
        const std::size_t si = cell / static_cast<std::size_t>(cfg.seeds);
        const std::size_t ki = cell % static_cast<std::size_t>(cfg.seeds);
        const double s_real = cfg.s_values[si];
        const std::uint64_t seed = cell_seed(cfg.settings.master_seed, si, ki);
        std::optional<Dataset> data;
        std::string sim_error;
        try {
            data = simulate_scenario(scenario, cfg.settings, s_real, seed);
        } catch (const std::exception& e) {
            sim_error = e.what();
        }
        for (std::size_t mi = 0; mi < per_cell; ++mi) {
            BenchmarkRecord& rec = records[cell * per_cell + mi];
            const Method method = cfg.methods[mi];
            rec.scenario = scenario.name;
            rec.method = method_name(method);
            rec.s_real = s_real;
            rec.seed = seed;
            rec.p = (method == Method::DEMs || method == Method::DEMFixed) ? cfg.settings.p : 0;
            if (!data) {
                rec.sse = kNaN;
                rec.error = sim_error;
                continue;
            }
            fill_record(rec, [&] {
                return run_method(method, scenario.plant, *data, cfg.settings, s_real);
            }, cfg.settings.timing);
        }
    });
    return records;
}

std::vector<BenchmarkRecord> embedding_sweep(const EmbeddingSweepConfig& cfg) {
    const Scenario scenario = cfg.scenario ? *cfg.scenario : make_scenario(cfg.settings.scenario);
    require(cfg.seeds >= 1, "embedding sweep: need at least one seed");
    for (int p : cfg.p_values) {
        require(p >= 0 && p <= 6, "embedding sweep: p must lie in 0..6");
    }
    const std::size_t per_cell = cfg.p_values.size();
    const std::size_t cells = cfg.s_values.size() * static_cast<std::size_t>(cfg.seeds);
    std::vector<BenchmarkRecord> records(cells * per_cell);

    parallel_for(cells, cfg.settings.jobs, [&](std::size_t cell) {
        const std::size_t si = cell / static_cast<std::size_t>(cfg.seeds);
        const std::size_t ki = cell % static_cast<std::size_t>(cfg.seeds);
        const double s_real = cfg.s_values[si];
        const std::uint64_t seed = cell_seed(cfg.settings.master_seed, si, ki);
        std::optional<Dataset> data;
        std::string sim_error;
        try {
            data = simulate_scenario(scenario, cfg.settings, s_real, seed);
        } catch (const std::exception& e) {
            sim_error = e.what();
        }
        for (std::size_t pi = 0; pi < per_cell; ++pi) {
            BenchmarkRecord& rec = records[cell * per_cell + pi];
            rec.scenario = scenario.name;
            rec.method = method_name(Method::DEMFixed);
            rec.s_real = s_real;
            rec.seed = seed;
            rec.p = cfg.p_values[pi];
            rec.s_assumed = s_real;
            fill_record(rec, [&] {
                if (!data) throw std::runtime_error(sim_error);
                return run_method(Method::DEMFixed, scenario.plant, *data, cfg.settings, s_real, rec.p);
            }, cfg.settings.timing);
        }
    });
    return records;
}

MismatchSweepResult mismatch_sweep(const MismatchSweepConfig& cfg) {
    const Scenario scenario = cfg.scenario ? *cfg.scenario : make_scenario(cfg.settings.scenario);
    require(cfg.seeds >= 1, "mismatch sweep: need at least one seed");
    for (double s : cfg.assumed_s) {
        require(s > 0.0 && s <= 1.0, "mismatch sweep: assumed smoothness must lie in (0, 1]");
    }
    for (double s : cfg.s_real) {
        require(s > 0.0 && s <= 1.0, "mismatch sweep: real smoothness must lie in (0, 1]");
    }
    const std::size_t grid = cfg.assumed_s.size();
    const std::size_t cells = cfg.s_real.size() * static_cast<std::size_t>(cfg.seeds);
    MismatchSweepResult out;
    out.dem.resize(cells * grid);
    out.kf.resize(cells);

    parallel_for(cells, cfg.settings.jobs, [&](std::size_t cell) {
        const std::size_t si = cell / static_cast<std::size_t>(cfg.seeds);
        const std::size_t ki = cell % static_cast<std::size_t>(cfg.seeds);
        const double s_real = cfg.s_real[si];
        const std::uint64_t seed = cell_seed(cfg.settings.master_seed, si, ki);
        std::optional<Dataset> data;
        std::string sim_error;
        try {
            data = simulate_scenario(scenario, cfg.settings, s_real, seed);
        } catch (const std::exception& e) {
            sim_error = e.what();
        }
        for (std::size_t gi = 0; gi < grid; ++gi) {
            BenchmarkRecord& rec = out.dem[cell * grid + gi];
            rec.scenario = scenario.name;
            rec.method = method_name(Method::DEMFixed);
            rec.s_real = s_real;
            rec.seed = seed;
            rec.p = cfg.settings.p;
            rec.s_assumed = cfg.assumed_s[gi];
            fill_record(rec, [&] {
                if (!data) throw std::runtime_error(sim_error);
                return run_method(Method::DEMFixed, scenario.plant, *data, cfg.settings,
                                  cfg.assumed_s[gi]);
            }, cfg.settings.timing);
        }
        BenchmarkRecord& kf = out.kf[cell];
        kf.scenario = scenario.name;
        kf.method = method_name(Method::KF);
        kf.s_real = s_real;
        kf.seed = seed;
        fill_record(kf, [&] {
            if (!data) throw std::runtime_error(sim_error);
            return run_method(Method::KF, scenario.plant, *data, cfg.settings, s_real);
        }, cfg.settings.timing);
    });
    return out;
}

double median_sse(const std::vector<BenchmarkRecord>& records,
                  const std::function<bool(const BenchmarkRecord&)>& pick) {
    std::vector<double> values;
    for (const auto& r : records) {
        if (pick(r)) {
            values.push_back(std::isnan(r.sse) ? std::numeric_limits<double>::infinity() : r.sse);
        }
    }
    return median(std::move(values));
}

std::vector<double> make_grid(double lo, double hi, double step) {
    require(step > 0.0 && hi >= lo, "make_grid: need step > 0 and hi >= lo");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
        grid.push_back(lo + static_cast<double>(i) * step);
    }
    return grid;
}

std::vector<LandscapeCurve> fe_landscape(const LinearPlant& plant, const Dataset& data,
                                         const ObserverConfig& cfg, const std::vector<double>& s_grid,
                                         const std::vector<double>& t_evals) {
    data.validate();
    require(!s_grid.empty() && !t_evals.empty(), "fe_landscape: empty grid");
    for (double s : s_grid) {
        require(s > 0.0 && s <= 1.0, "fe_landscape: grid smoothness must lie in (0, 1]");
    }
    std::vector<Eigen::Index> indices;
    for (double t : t_evals) {
        require(t >= data.times(0) && t <= data.times(data.size() - 1),
                "fe_landscape: t_eval outside the dataset span");
        indices.push_back(static_cast<Eigen::Index>(std::llround((t - data.times(0)) / data.dt)));
    }
    const Eigen::Index last = *std::max_element(indices.begin(), indices.end());

    const auto y_gen = embed_sequence(data.y, cfg.dt, cfg.p);
    const auto v_gen = embed_sequence(data.v, cfg.dt, cfg.d);

    std::vector<LandscapeCurve> curves(t_evals.size());
    for (std::size_t c = 0; c < curves.size(); ++c) {
        curves[c].t_eval = t_evals[c];
        curves[c].s = s_grid;
        curves[c].F.assign(s_grid.size(), 0.0);
    }
    for (std::size_t g = 0; g < s_grid.size(); ++g) {
        DemObserver obs(plant, cfg, s_grid[g], false);
        for (Eigen::Index k = 0; k <= last; ++k) {
            const auto i = static_cast<std::size_t>(k);
            const ObserverState& st = obs.step(y_gen[i], v_gen[i]);
            for (std::size_t c = 0; c < curves.size(); ++c) {
                if (indices[c] == k) {
                    curves[c].F[g] = st.last_F.F;
                }
            }
        }
    }
    for (auto& curve : curves) {
        const auto best = std::max_element(curve.F.begin(), curve.F.end());
        curve.argmax_s = curve.s[static_cast<std::size_t>(best - curve.F.begin())];
        for (std::size_t g = 1; g + 1 < curve.F.size(); ++g) {
            if (curve.F[g] > curve.F[g - 1] && curve.F[g] > curve.F[g + 1]) {
                ++curve.interior_maxima;
            }
        }
    }
    return curves;
}

namespace {

// Uniform draw from the open Euclidean unit ball.
Vector sample_in_unit_ball(std::mt19937_64& gen, Eigen::Index len) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector dir(len);
    double norm = 0.0;
    while (norm == 0.0) {
        for (Eigen::Index k = 0; k < len; ++k) {
            dir(k) = normal(gen);
        }
        norm = dir.norm();
    }
    const double radius = std::pow(unit(gen), 1.0 / static_cast<double>(len));
    return (radius / norm) * dir;
}

} // namespace

QuadrantResult quadrant_analysis(std::size_t sample_count, std::uint64_t seed, int p,
                                 Eigen::Index n, Eigen::Index m, bool keep_samples) {
    require(sample_count >= 1, "quadrant_analysis: need at least one sample");
    require(p >= 0 && n >= 1 && m >= 1, "quadrant_analysis: invalid dimensions");
    std::mt19937_64 gen(derive_seed(seed, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Matrix pz = Matrix::Identity(m, m);
    const Matrix pw = Matrix::Identity(n, n);
    const Eigen::Index len = (p + 1) * (n + m);

    QuadrantResult out;
    if (keep_samples) {
        out.samples.reserve(sample_count);
    }
    for (std::size_t i = 0; i < sample_count; ++i) {
        const Vector eps = sample_in_unit_ball(gen, len);
        const double s = 1.0 - unit(gen); // (0, 1]
        const auto gp = generalized_precision(smoothness_precision(p, s), pz, pw);
        const PrecisionForms f = precision_forms(eps, gp);
        if (f.first > 0.0 && f.second > 0.0) {
            ++out.counts[0];
        } else if (f.first < 0.0 && f.second > 0.0) {
            ++out.counts[1];
        } else if (f.first < 0.0 && f.second < 0.0) {
            ++out.counts[2];
        } else if (f.first > 0.0 && f.second < 0.0) {
            ++out.counts[3];
        } else {
            ++out.on_axis;
        }
        if (keep_samples) {
            out.samples.push_back({s, f.first, f.second});
        }
    }
    return out;
}

StationaryCheck check_stationary_points(std::size_t trials, std::uint64_t seed, int p,
                                        Eigen::Index n, Eigen::Index m, double log_prec, double dt,
                                        int grid_points) {
    require(dt > 0.0 && dt < 1.0, "check_stationary_points: dt must lie in (0, 1)");
    require(grid_points >= 2, "check_stationary_points: need at least two grid points");
    std::mt19937_64 gen(derive_seed(seed, 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Matrix pz = isotropic_precision(log_prec, m);
    const Matrix pw = isotropic_precision(log_prec, n);
    const SmoothnessPrior prior{0.0, 1.0};
    const Eigen::Index len = (p + 1) * (n + m);

    auto eval = [&](const Vector& eps, double s) {
        const auto gp = generalized_precision(smoothness_precision(p, s), pz, pw);
        return evaluate_free_energy(eps, gp, s, prior);
    };
    auto slope = [&](const Vector& eps, double s) {
        const auto gp = generalized_precision(smoothness_precision(p, s), pz, pw);
        return precision_forms(eps, gp).first;
    };

    StationaryCheck out;
    out.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const Vector eps = sample_in_unit_ball(gen, len);
        const double lo = dt;
        const double hi = 1.0;
        const double step = (hi - lo) / grid_points;
        double s_prev = lo;
        double f_prev = eval(eps, s_prev).F_s;
        bool found = false;
        for (int g = 1; g <= grid_points; ++g) {
            const double s_cur = lo + g * step;
            const double f_cur = eval(eps, s_cur).F_s;
            if ((f_prev > 0.0) != (f_cur > 0.0)) {
                double a = s_prev, b = s_cur, fa = f_prev;
                for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
                    const double mid = 0.5 * (a + b);
                    const double fm = eval(eps, mid).F_s;
                    if ((fm > 0.0) == (fa > 0.0)) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                const double root = 0.5 * (a + b);
                ++out.roots;
                found = true;
                if (!(eval(eps, root).F_ss < 0.0)) {
                    ++out.curvature_violations;
                }
                if (!(slope(eps, root) > 0.0)) {
                    ++out.slope_violations;
                }
            }
            s_prev = s_cur;
            f_prev = f_cur;
        }
        if (found) {
            ++out.trials_with_root;
        }
    }
    return out;
}

} // namespace dems

#pragma once

#include <optional>
#include <vector>

#include "dems/free_energy.hpp"
#include "dems/gencoord.hpp"
#include "dems/noise_model.hpp"

namespace dems {

struct Dataset;
struct TrialResult;

struct ObserverConfig {
    int p = 6;
    int d = 2;
    double k_x = 1.0;
    double s_init = 0.001;
    double s_min = 1e-4;
    double s_max = 1.0;
    double dt = 0.1;
    SmoothnessPrior prior;
    Matrix prec_w; // n x n
    Matrix prec_z; // m x m

    void validate() const;
};

struct SmoothnessBounds {
    double lower = 1e-4;
    double upper = 1.0;
};

struct ObserverState {
    GeneralizedVector x_gen;
    double s = 0.0;
    double t = 0.0;
    FreeEnergyEval last_F;
};

/// Generalized observer dynamics x~' = A1 x~ + B1 [y~; v~].
struct ObserverMatrices {
    Matrix A1; // (p+1)n square
    Matrix B1; // (p+1)n x ((p+1)m + (d+1)r)
};

ObserverMatrices build_observer_matrices(const GeneralizedSystem& gsys,
                                         const GeneralizedPrecision& gp, double k_x);

/// Exact discretization of the observer over dt. Returns the new x~.
Vector state_step(const ObserverMatrices& om, const Vector& x_gen, const Vector& y_gen,
                  const Vector& v_gen, double dt, IntegralPath path = IntegralPath::Automatic);

/// Exponential-Euler (Newton-Gauss) step on s, clamped to bounds.
double smoothness_step(double s, double F_s, double F_ss, double dt, SmoothnessBounds bounds);

/// Joint state and smoothness estimation.
TrialResult run_dems(const LinearPlant& plant, const Dataset& data, const ObserverConfig& cfg);

/// State estimation with the smoothness held at s_fixed.
TrialResult run_dem_fixed_s(const LinearPlant& plant, const Dataset& data, const ObserverConfig& cfg,
                            double s_fixed);

/// Step-by-step driver shared by both runs. Exposed so callers can inspect
/// intermediate states (for example the free energy at a given time).
class DemObserver {
public:
    DemObserver(const LinearPlant& plant, const ObserverConfig& cfg, double s_start, bool adapt_s);

    /// Consumes one embedded sample; returns the updated state.
    const ObserverState& step(const GeneralizedVector& y_gen, const GeneralizedVector& v_gen);

    const ObserverState& state() const { return state_; }
    const GeneralizedSystem& system() const { return gsys_; }
    std::size_t steps() const { return steps_; }
    std::size_t rebuilds() const { return rebuilds_; }

    /// Disables the |ds| < 1e-12 reuse of the discretized matrices.
    void set_caching(bool enabled) { caching_ = enabled; }

private:
    void rebuild(double s);

    ObserverConfig cfg_;
    GeneralizedSystem gsys_;
    bool adapt_s_;
    bool caching_ = true;
    ObserverState state_;

    std::optional<double> cached_s_;
    GeneralizedPrecision gp_;
    ObserverMatrices om_;
    ExactDiscretization disc_;
    double a1_norm_ = 0.0;
    double b1_norm_ = 0.0;
    std::size_t steps_ = 0;
    std::size_t rebuilds_ = 0;
};

} // namespace dems

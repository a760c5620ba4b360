#pragma once

#include "dems/gencoord.hpp"
#include "dems/noise_model.hpp"

namespace dems {

/// Gaussian prior on the smoothness: mean eta_s, precision prec_s.
struct SmoothnessPrior {
    double eta_s = 0.001;
    double prec_s = 1.0;

    bool operator==(const SmoothnessPrior&) const = default;
};

struct FreeEnergyEval {
    double F = 0.0;
    double F_s = 0.0;
    double F_ss = 0.0;
    Vector eps;
};

/// [y~ - C~ x~ ; D x~ - A~ x~ - B~ v~], output block first.
Vector prediction_error(const GeneralizedSystem& gsys, const GeneralizedVector& x_gen,
                        const GeneralizedVector& y_gen, const GeneralizedVector& v_gen);

/// The three quadratic forms eps' Pi~ eps, eps' Pi~_s eps, eps' Pi~_ss eps,
/// evaluated blockwise through S and the marginal precisions.
struct PrecisionForms {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

PrecisionForms precision_forms(const Vector& eps, const GeneralizedPrecision& gp);

double free_energy(const Vector& eps, const GeneralizedPrecision& gp, double s,
                   const SmoothnessPrior& prior);

struct FreeEnergyGrads {
    double F_s = 0.0;
    double F_ss = 0.0;
};

FreeEnergyGrads free_energy_grads(const Vector& eps, const GeneralizedPrecision& gp, double s,
                                  const SmoothnessPrior& prior);

/// F, F_s and F_ss in one pass.
FreeEnergyEval evaluate_free_energy(const Vector& eps, const GeneralizedPrecision& gp, double s,
                                    const SmoothnessPrior& prior);

/// -F_s: half the error-weighted precision slope minus the log-determinant
/// slope plus the prior pull. Zero at stationary points of F.
double stationarity_residual(const Vector& eps, const GeneralizedPrecision& gp, double s,
                             const SmoothnessPrior& prior);

} // namespace dems

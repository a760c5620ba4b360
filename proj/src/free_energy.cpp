#include "dems/free_energy.hpp"

#include <algorithm>
#include <cmath>

#include "dems/errors.hpp"

namespace dems {

Vector prediction_error(const GeneralizedSystem& gsys, const GeneralizedVector& x_gen,
                        const GeneralizedVector& y_gen, const GeneralizedVector& v_gen) {
    const auto& plant = gsys.plant;
    require(x_gen.base_dim() == plant.n() && x_gen.order() == gsys.p,
            "prediction_error: state vector does not match the generalized system");
    require(y_gen.base_dim() == plant.m() && y_gen.order() == gsys.p,
            "prediction_error: output vector does not match the generalized system");
    require(v_gen.base_dim() == plant.r() && v_gen.order() == gsys.d,
            "prediction_error: input vector does not match the generalized system");

    const Eigen::Index ny = y_gen.values().size();
    const Eigen::Index nx = x_gen.values().size();
    Vector eps(ny + nx);
    eps.head(ny) = y_gen.values() - gsys.C_gen * x_gen.values();
    eps.tail(nx) = gsys.Dx * x_gen.values() - gsys.A_gen * x_gen.values() - gsys.B_gen * v_gen.values();
    return eps;
}

namespace {

// Reshapes a derivative-major block of length (p+1)*dim into dim x (p+1)
// and returns G = E' P E, so that eps' (S (x) P) eps = sum(S .* G).
Matrix block_gram(const Vector& block, const Matrix& prec, int p) {
    const Eigen::Index dim = prec.rows();
    const Eigen::Map<const Matrix> e(block.data(), dim, p + 1);
    return e.transpose() * prec * e;
}

} // namespace

PrecisionForms precision_forms(const Vector& eps, const GeneralizedPrecision& gp) {
    const int p = gp.p();
    const Eigen::Index nz = (p + 1) * gp.m();
    const Eigen::Index nw = (p + 1) * gp.n();
    require(eps.size() == nz + nw, "precision_forms: error vector length must be (p+1)(m+n)");
    const Vector ez = eps.head(nz);
    const Vector ew = eps.tail(nw);
    const Matrix gram = block_gram(ez, gp.prec_z, p) + block_gram(ew, gp.prec_w, p);
    const auto& sp = gp.smooth;
    return {sp.S.cwiseProduct(gram).sum(), sp.S_s.cwiseProduct(gram).sum(),
            sp.S_ss.cwiseProduct(gram).sum()};
}

namespace {

void check_inputs(const Vector& eps, double s, const SmoothnessPrior& prior) {
    require(s > 0.0 && std::isfinite(s), "free energy: s must be positive");
    require(eps.allFinite(), "free energy: prediction error must be finite");
    require(prior.prec_s > 0.0 && std::isfinite(prior.prec_s) && std::isfinite(prior.eta_s),
            "free energy: prior precision must be positive");
}

} // namespace

FreeEnergyEval evaluate_free_energy(const Vector& eps, const GeneralizedPrecision& gp, double s,
                                    const SmoothnessPrior& prior) {
    check_inputs(eps, s, prior);
    require(std::abs(s - gp.smooth.s) <= 1e-12 * std::max(1.0, s),
            "free energy: s does not match the precision it was built for");
    const PrecisionForms forms = precision_forms(eps, gp);
    const LogDetGrads ld = log_det_precision_grads(gp.p(), s, gp.n(), gp.m());
    const double eps_s = s - prior.eta_s;

    FreeEnergyEval out;
    out.F = -0.5 * forms.value + 0.5 * gp.log_det - 0.5 * prior.prec_s * eps_s * eps_s +
            0.5 * std::log(prior.prec_s);
    out.F_s = -0.5 * forms.first + 0.5 * ld.first - prior.prec_s * eps_s;
    out.F_ss = -0.5 * forms.second + 0.5 * ld.second - prior.prec_s;
    out.eps = eps;
    return out;
}

double free_energy(const Vector& eps, const GeneralizedPrecision& gp, double s,
                   const SmoothnessPrior& prior) {
    return evaluate_free_energy(eps, gp, s, prior).F;
}

FreeEnergyGrads free_energy_grads(const Vector& eps, const GeneralizedPrecision& gp, double s,
                                  const SmoothnessPrior& prior) {
    const FreeEnergyEval e = evaluate_free_energy(eps, gp, s, prior);
    return {e.F_s, e.F_ss};
}

double stationarity_residual(const Vector& eps, const GeneralizedPrecision& gp, double s,
                             const SmoothnessPrior& prior) {
    return -free_energy_grads(eps, gp, s, prior).F_s;
}

} // namespace dems

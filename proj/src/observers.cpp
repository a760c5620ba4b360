#include "dems/observers.hpp"

#include <algorithm>
#include <cmath>

#include "dems/errors.hpp"
#include "dems/simlab.hpp"

namespace dems {

void ObserverConfig::validate() const {
    require(p >= 0, "observer: p must be non-negative");
    require(d >= 0 && d <= p, "observer: d must satisfy 0 <= d <= p");
    require(std::isfinite(k_x) && k_x >= 0.0, "observer: k_x must be finite and non-negative");
    require(s_min > 0.0 && s_min <= s_max && s_max <= 1.0, "observer: bounds must satisfy 0 < s_min <= s_max <= 1");
    require(s_init >= s_min && s_init <= s_max, "observer: s_init must lie within [s_min, s_max]");
    require(dt > 0.0 && std::isfinite(dt), "observer: dt must be positive");
    require(prior.prec_s > 0.0, "observer: prior precision must be positive");
    require(is_positive_definite(prec_w), "observer: process precision must be SPD");
    require(is_positive_definite(prec_z), "observer: measurement precision must be SPD");
}

ObserverMatrices build_observer_matrices(const GeneralizedSystem& gsys,
                                         const GeneralizedPrecision& gp, double k_x) {
    const Eigen::Index nx = gsys.A_gen.rows();
    require(gp.block_w.rows() == nx, "build_observer_matrices: process precision block has wrong size");
    require(gp.block_z.rows() == gsys.C_gen.rows(),
            "build_observer_matrices: measurement precision block has wrong size");

    const Matrix motion = gsys.Dx - gsys.A_gen;
    const Matrix ct_pz = gsys.C_gen.transpose() * gp.block_z;
    const Matrix mt_pw = motion.transpose() * gp.block_w;

    ObserverMatrices om;
    om.A1 = gsys.Dx - k_x * (ct_pz * gsys.C_gen) - k_x * (mt_pw * motion);
    om.B1.resize(nx, ct_pz.cols() + gsys.B_gen.cols());
    om.B1.leftCols(ct_pz.cols()) = k_x * ct_pz;
    om.B1.rightCols(gsys.B_gen.cols()) = k_x * (mt_pw * gsys.B_gen);
    return om;
}

Vector state_step(const ObserverMatrices& om, const Vector& x_gen, const Vector& y_gen,
                  const Vector& v_gen, double dt, IntegralPath path) {
    require(dt > 0.0, "state_step: dt must be positive");
    require(x_gen.size() == om.A1.rows(), "state_step: state length mismatch");
    require(y_gen.size() + v_gen.size() == om.B1.cols(), "state_step: input length mismatch");
    Vector u(om.B1.cols());
    u << y_gen, v_gen;
    const ExactDiscretization disc = discretize_exact(om.A1, dt, path);
    Vector next = disc.transition * x_gen + disc.input_gain * (om.B1 * u);
    if (!next.allFinite()) {
        throw DivergenceError("state_step: non-finite state", 0);
    }
    return next;
}

double smoothness_step(double s, double F_s, double F_ss, double dt, SmoothnessBounds bounds) {
    require(std::isfinite(F_s) && std::isfinite(F_ss), "smoothness_step: gradients must be finite");
    require(dt > 0.0, "smoothness_step: dt must be positive");
    double ds = 0.0;
    if (std::abs(F_ss) < 1e-9) {
        ds = F_s * dt;
    } else {
        ds = std::expm1(F_ss * dt) * F_s / F_ss;
    }
    return std::clamp(s + ds, bounds.lower, bounds.upper);
}

DemObserver::DemObserver(const LinearPlant& plant, const ObserverConfig& cfg, double s_start,
                         bool adapt_s)
    : cfg_(cfg), gsys_(lift_system(plant, cfg.p, cfg.d)), adapt_s_(adapt_s) {
    cfg_.validate();
    require(cfg.prec_w.rows() == plant.n(), "observer: process precision must be n x n");
    require(cfg.prec_z.rows() == plant.m(), "observer: measurement precision must be m x m");
    require(s_start > 0.0 && s_start <= 1.0, "observer: starting smoothness must lie in (0, 1]");
    state_.x_gen = GeneralizedVector(plant.n(), cfg.p);
    state_.s = s_start;
}

void DemObserver::rebuild(double s) {
    gp_ = generalized_precision(smoothness_precision(cfg_.p, s), cfg_.prec_z, cfg_.prec_w);
    om_ = build_observer_matrices(gsys_, gp_, cfg_.k_x);
    disc_ = discretize_exact(om_.A1, cfg_.dt);
    disc_.input_gain = disc_.input_gain * om_.B1;
    a1_norm_ = om_.A1.norm();
    b1_norm_ = om_.B1.norm();
    cached_s_ = s;
    ++rebuilds_;
}

const ObserverState& DemObserver::step(const GeneralizedVector& y_gen, const GeneralizedVector& v_gen) {
    const double s = state_.s;
    if (!caching_ || !cached_s_ || std::abs(s - *cached_s_) >= 1e-12) {
        rebuild(s);
    }
    const Vector& x = state_.x_gen.values();
    Vector u(y_gen.values().size() + v_gen.values().size());
    u << y_gen.values(), v_gen.values();
    Vector next = disc_.transition * x + disc_.input_gain * u;

    if (!next.allFinite()) {
        throw DivergenceError("DEM observer produced a non-finite state", steps_);
    }
    const double growth = std::exp(a1_norm_ * cfg_.dt);
    const double bound = growth * (x.norm() + cfg_.dt * b1_norm_ * u.norm());
    if (std::isfinite(bound) && next.norm() > bound * (1.0 + 1e-9) + 1e-300) {
        throw DivergenceError("DEM observer state exceeded the propagation bound", steps_);
    }
    state_.x_gen.values() = std::move(next);

    const Vector eps = prediction_error(gsys_, state_.x_gen, y_gen, v_gen);
    state_.last_F = evaluate_free_energy(eps, gp_, s, cfg_.prior);
    if (adapt_s_) {
        state_.s = smoothness_step(s, state_.last_F.F_s, state_.last_F.F_ss, cfg_.dt,
                                   {cfg_.s_min, cfg_.s_max});
    }
    state_.t += cfg_.dt;
    ++steps_;
    return state_;
}

namespace {

TrialResult run_observer(const LinearPlant& plant, const Dataset& data, const ObserverConfig& cfg,
                         double s_start, bool adapt_s) {
    data.validate();
    plant.validate();
    require(data.y.cols() == plant.m(), "DEM: dataset output width does not match the plant");
    require(data.v.cols() == plant.r(), "DEM: dataset input width does not match the plant");
    require(std::abs(data.dt - cfg.dt) <= 1e-9 * cfg.dt, "DEM: dataset dt does not match observer dt");
    require(data.size() >= cfg.p + 1, "DEM: dataset too short for the embedding window");

    const auto y_gen = embed_sequence(data.y, cfg.dt, cfg.p);
    const auto v_gen = embed_sequence(data.v, cfg.dt, cfg.d);

    DemObserver obs(plant, cfg, s_start, adapt_s);
    const Eigen::Index count = data.size();
    const Eigen::Index n = plant.n();
    TrialResult out;
    out.estimates.resize(count, n);
    out.gen_estimates.resize(count, (cfg.p + 1) * n);
    out.F_traj.reserve(static_cast<std::size_t>(count));
    if (adapt_s) {
        out.s_traj.reserve(static_cast<std::size_t>(count));
    }
    for (Eigen::Index k = 0; k < count; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const ObserverState& st = obs.step(y_gen[i], v_gen[i]);
        out.gen_estimates.row(k) = st.x_gen.values().transpose();
        out.estimates.row(k) = st.x_gen.block(0).transpose();
        out.F_traj.push_back(st.last_F.F);
        if (adapt_s) {
            out.s_traj.push_back(st.s);
        }
    }
    if (data.x) {
        out.sse = sse(out.estimates, *data.x);
    }
    return out;
}

} // namespace

TrialResult run_dems(const LinearPlant& plant, const Dataset& data, const ObserverConfig& cfg) {
    return run_observer(plant, data, cfg, cfg.s_init, true);
}

TrialResult run_dem_fixed_s(const LinearPlant& plant, const Dataset& data, const ObserverConfig& cfg,
                            double s_fixed) {
    require(s_fixed > 0.0 && s_fixed <= 1.0, "DEM: fixed smoothness must lie in (0, 1]");
    return run_observer(plant, data, cfg, s_fixed, false);
}

} // namespace dems

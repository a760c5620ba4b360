#include <doctest.h>

#include <cmath>

#include "dems/errors.hpp"
#include "dems/free_energy.hpp"
#include "dems/simlab.hpp"
#include "support.hpp"

using namespace dems;
using testing::Gen;
using testing::rel_err;

namespace {

GeneralizedPrecision make_gp(int p, double s, const Matrix& pz, const Matrix& pw) {
    return generalized_precision(smoothness_precision(p, s), pz, pw);
}

// Dense evaluation through the full matrix, independent of the blockwise path.
double dense_F(const Vector& eps, int p, double s, const Matrix& pz, const Matrix& pw, const SmoothnessPrior& prior) {
    const Matrix full = make_gp(p, s, pz, pw).full();
    return -0.5 * eps.dot(full * eps) + 0.5 * log_det_spd(full) -
           0.5 * prior.prec_s * (s - prior.eta_s) * (s - prior.eta_s) + 0.5 * std::log(prior.prec_s);
}

} // namespace

TEST_CASE("prediction error with zero state and input is the output") {
    const GeneralizedSystem gs = lift_system(scenario_paper_system(), 6, 2);
    Gen g(31);
    const GeneralizedVector y(4, 6, g.vector(28));
    const GeneralizedVector x(2, 6);
    const GeneralizedVector v(1, 2);
    const Vector eps = prediction_error(gs, x, y, v);
    CHECK(eps.size() == 42);
    CHECK(eps.head(28) == y.values());
    CHECK(eps.tail(14).isZero());
}

TEST_CASE("prediction error vanishes on a consistent noiseless trajectory") {
    const LinearPlant plant = scenario_paper_system();
    const GeneralizedSystem gs = lift_system(plant, 6, 2);
    Gen g(32);
    // Input with two nonzero derivatives; build the state derivatives from the plant.
    const Vector v0 = g.vector(1), v1 = g.vector(1), v2 = g.vector(1);
    std::vector<Vector> xs{g.vector(2)};
    const std::vector<Vector> vs{v0, v1, v2, Vector::Zero(1), Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)};
    for (int k = 1; k <= 6; ++k) xs.push_back(plant.A * xs.back() + plant.B * vs[static_cast<std::size_t>(k - 1)]);
    GeneralizedVector x(2, 6), y(4, 6), v(1, 2);
    for (int k = 0; k <= 6; ++k) {
        x.block(k) = xs[static_cast<std::size_t>(k)];
        y.block(k) = plant.C * xs[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k <= 2; ++k) v.block(k) = vs[static_cast<std::size_t>(k)];
    const Vector eps = prediction_error(gs, x, y, v);
    // The top state derivative has no successor in the embedding.
    CHECK(eps.head(28).norm() < 1e-12);
    CHECK(eps.segment(28, 12).norm() < 1e-12);
}

TEST_CASE("prediction error rejects mismatched orders") {
    const GeneralizedSystem gs = lift_system(scenario_paper_system(), 6, 2);
    CHECK_THROWS_AS(prediction_error(gs, GeneralizedVector(2, 5), GeneralizedVector(4, 6), GeneralizedVector(1, 2)),
                    ValidationError);
}

TEST_CASE("free energy at zero error") {
    const double s = 0.5;
    const Matrix pz = std::exp(6.0) * Matrix::Identity(4, 4);
    const Matrix pw = std::exp(6.0) * Matrix::Identity(2, 2);
    const SmoothnessPrior prior{0.0, 1.0};
    const double want = 0.5 * (7 * (24.0 + 12.0) + 6 * (std::log(512.0 / 6075.0) + 42 * std::log(0.5))) - 0.5 * 0.25;
    const double got = free_energy(Vector::Zero(42), make_gp(6, s, pz, pw), s, prior);
    CHECK(rel_err(got, want) < 1e-12);
}

TEST_CASE("free energy gradients at zero error") {
    const SmoothnessPrior prior{0.0, 1.0};
    for (double s : {0.2, 0.6, 1.0}) {
        const auto gp = make_gp(6, s, Matrix::Identity(4, 4), Matrix::Identity(2, 2));
        const FreeEnergyGrads g = free_energy_grads(Vector::Zero(42), gp, s, prior);
        CHECK(g.F_s == doctest::Approx(21.0 * 6 / s - s).epsilon(1e-13));
        CHECK(g.F_ss == doctest::Approx(-21.0 * 6 / (s * s) - 1).epsilon(1e-13));
    }
}

TEST_CASE("stationarity residual at zero error, s = 1") {
    const auto gp = make_gp(6, 1.0, Matrix::Identity(4, 4), Matrix::Identity(2, 2));
    CHECK(stationarity_residual(Vector::Zero(42), gp, 1.0, SmoothnessPrior{0.0, 1.0}) ==
          doctest::Approx(-125.0).epsilon(1e-14));
}

TEST_CASE("free energy is quadratic in the error") {
    Gen g(33);
    for (int trial = 0; trial < 20; ++trial) {
        const double s = g.uniform(0.1, 0.9);
        const auto gp = make_gp(6, s, g.spd(4), g.spd(2));
        const Vector eps = g.vector(42);
        const SmoothnessPrior prior;
        const double f0 = free_energy(Vector::Zero(42), gp, s, prior);
        const double f1 = free_energy(eps, gp, s, prior);
        const double f2 = free_energy(2 * eps, gp, s, prior);
        CHECK(f2 - f0 == doctest::Approx(4 * (f1 - f0)).epsilon(1e-10));
        CHECK(f1 < f0);
    }
}

TEST_CASE("blockwise forms agree with the dense matrix") {
    Gen g(34);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = g.integer(0, 6);
        const Eigen::Index n = g.integer(1, 3), m = g.integer(1, 3);
        const double s = g.uniform(0.1, 1.0);
        const Matrix pz = g.spd(m), pw = g.spd(n);
        const auto gp = make_gp(p, s, pz, pw);
        const Vector eps = g.vector((p + 1) * (n + m));
        const SmoothnessPrior prior{g.uniform(0.0, 0.5), g.uniform(0.5, 2.0)};
        CHECK(free_energy(eps, gp, s, prior) == doctest::Approx(dense_F(eps, p, s, pz, pw, prior)).epsilon(1e-9));
    }
}

TEST_CASE("free energy gradients match central differences") {
    Gen g(35);
    for (int trial = 0; trial < 100; ++trial) {
        const double s = g.uniform(0.1, 0.9);
        const Matrix pz = std::exp(g.uniform(0.0, 6.0)) * Matrix::Identity(4, 4);
        const Matrix pw = std::exp(g.uniform(0.0, 6.0)) * Matrix::Identity(2, 2);
        const Vector eps = g.vector(42);
        const SmoothnessPrior prior;
        const double h = 1e-5;
        auto F = [&](double ss) { return free_energy(eps, make_gp(6, ss, pz, pw), ss, prior); };
        const FreeEnergyGrads gr = free_energy_grads(eps, make_gp(6, s, pz, pw), s, prior);
        const double fd1 = (F(s + h) - F(s - h)) / (2 * h);
        const double fd2 = (F(s + h) - 2 * F(s) + F(s - h)) / (h * h);
        CHECK(rel_err(gr.F_s, fd1) < 1e-4);
        // Second differences lose digits; compare against a step tuned for them.
        const double h2 = 1e-4;
        const double fd2b = (F(s + h2) - 2 * F(s) + F(s - h2)) / (h2 * h2);
        CHECK(std::min(rel_err(gr.F_ss, fd2), rel_err(gr.F_ss, fd2b)) < 1e-4);
    }
}

TEST_CASE("evaluate_free_energy bundles consistent values") {
    Gen g(36);
    const double s = 0.45;
    const auto gp = make_gp(6, s, Matrix::Identity(4, 4), Matrix::Identity(2, 2));
    const Vector eps = g.vector(42);
    const SmoothnessPrior prior;
    const FreeEnergyEval e = evaluate_free_energy(eps, gp, s, prior);
    CHECK(e.F == free_energy(eps, gp, s, prior));
    CHECK(e.F_s == free_energy_grads(eps, gp, s, prior).F_s);
    CHECK(e.F_ss == free_energy_grads(eps, gp, s, prior).F_ss);
    CHECK(stationarity_residual(eps, gp, s, prior) == -e.F_s);
    CHECK_THROWS_AS(evaluate_free_energy(eps, gp, 0.3, prior), ValidationError);
}

TEST_CASE("residual changes sign across a root of F_s") {
    Gen g(37);
    const Matrix pz = std::exp(6.0) * Matrix::Identity(4, 4);
    const Matrix pw = std::exp(6.0) * Matrix::Identity(2, 2);
    const SmoothnessPrior prior{0.0, 1.0};
    int found = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Vector eps = 0.3 * g.vector(42);
        auto r = [&](double s) { return stationarity_residual(eps, make_gp(6, s, pz, pw), s, prior); };
        double lo = 0.1, hi = 1.0;
        if ((r(lo) > 0) == (r(hi) > 0)) continue;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            ((r(mid) > 0) == (r(lo) > 0) ? lo : hi) = mid;
        }
        ++found;
        CHECK(std::abs(r(0.5 * (lo + hi))) < 1e-6 * (1.0 + std::abs(r(0.1))));
    }
    CHECK(found > 0);
}

#include <doctest.h>

#include <cmath>
#include <set>

#include "dems/errors.hpp"
#include "dems/experiments.hpp"
#include "support.hpp"

using namespace dems;
using testing::Gen;

namespace {

NoiseSpec quiet_noise(Eigen::Index n, Eigen::Index m) {
    NoiseSpec ns;
    ns.s = 0.3;
    ns.prec_w = 1e300 * Matrix::Identity(n, n);
    ns.prec_z = 1e300 * Matrix::Identity(m, m);
    return ns;
}

InputFn bump() {
    return [](double t, const Vector&) { return gaussian_bump_input(t); };
}

} // namespace

TEST_CASE("working example plant") {
    const LinearPlant p = scenario_paper_system();
    CHECK(p.n() == 2);
    CHECK(p.r() == 1);
    CHECK(p.m() == 4);
    CHECK(p.A(0, 0) == 0.0484);
    CHECK(p.A(1, 0) == -0.7617);
    CHECK(p.B(0, 0) == 0.3604);
    CHECK(p.B(1, 0) == 0.0776);
    CHECK(p.C(3, 1) == -0.9290);
    CHECK(p.C(2, 0) == 0.3871);
    const Eigen::EigenSolver<Matrix> es(p.A);
    CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
}

TEST_CASE("quadrotor roll plant") {
    const LinearPlant p = scenario_quadrotor();
    CHECK(p.n() == 2);
    CHECK(p.r() == 4);
    CHECK(p.m() == 1);
    CHECK(p.B(1, 0) == doctest::Approx(1.274e-3 / 3.4e-3));
    CHECK(p.B(1, 0) == doctest::Approx(0.3747).epsilon(1e-4));
    CHECK(p.B(1, 0) == -p.B(1, 1));
    CHECK(p.B(1, 3) == p.B(1, 0));
    CHECK(p.B.row(0).isZero());
    CHECK(p.C(0, 0) == 1.0);
    CHECK(p.C(0, 1) == 0.0);
    const Scenario sc = make_scenario("quadrotor");
    CHECK(sc.dt == 0.0083);
    CHECK(sc.T == 15.0);
    CHECK(sc.log_prec_w == 4.0);
    CHECK(sc.log_prec_z == 10.0);
    CHECK(sc.p == 2);
    CHECK(sc.d == 2);
    CHECK_THROWS_AS(make_scenario("nope"), ValidationError);
}

TEST_CASE("gaussian bump peaks at t = 12") {
    CHECK(gaussian_bump_input(12.0)(0) == 1.0);
    CHECK(gaussian_bump_input(14.0)(0) == doctest::Approx(std::exp(-1.0)));
    CHECK(gaussian_bump_input(10.0)(0) == doctest::Approx(gaussian_bump_input(14.0)(0)));
}

TEST_CASE("noiseless unforced simulation stays at zero") {
    const LinearPlant p = scenario_paper_system();
    const Dataset d = simulate_lti(p, [](double, const Vector&) { return Vector::Zero(1).eval(); }, quiet_noise(2, 4),
                                   5.0, 0.1, 1, Vector::Zero(2));
    CHECK(d.size() == 51);
    CHECK(testing::max_abs(d.y) < 1e-100);
    CHECK(testing::max_abs(*d.x) < 1e-100);
    CHECK(d.v.isZero());
}

TEST_CASE("simulation grid and determinism") {
    const Scenario sc = make_scenario("paper_system");
    const StudySettings st = default_settings(sc);
    const Dataset a = simulate_scenario(sc, st, 0.5, 3);
    const Dataset b = simulate_scenario(sc, st, 0.5, 3);
    const Dataset c = simulate_scenario(sc, st, 0.5, 4);
    CHECK(a.size() == 321);
    CHECK(a.times(320) == doctest::Approx(32.0));
    CHECK(a.y == b.y);
    CHECK(*a.x == *b.x);
    CHECK(a.y != c.y);
    CHECK(a.meta.s_real == 0.5);
    CHECK(a.meta.seed == 3);
    CHECK_NOTHROW(a.validate());
    CHECK(testing::max_abs(a.y - *a.x * sc.plant.C.transpose() - *a.z) < 1e-14);
}

TEST_CASE("noiseless simulation follows the exact propagation") {
    const LinearPlant p = scenario_paper_system();
    Vector x0(2);
    x0 << 0.5, -0.2;
    const double dt = 0.1, h = dt / 10;
    const Dataset d = simulate_lti(p, bump(), quiet_noise(2, 4), 20.0, dt, 1, x0);
    const Matrix phi = expm(p.A * h);
    // Simpson quadrature of the input integral over one sub-step.
    Matrix gamma = Matrix::Zero(2, 2);
    const int intervals = 100;
    for (int i = 0; i <= intervals; ++i) {
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        gamma += w * expm(p.A * (i * h / intervals));
    }
    gamma *= h / intervals / 3.0;
    for (Eigen::Index k = 0; k + 1 < d.size(); ++k) {
        Vector x = d.x->row(k).transpose();
        for (int j = 0; j < 10; ++j) {
            const double t = static_cast<double>(k * 10 + j) * h;
            x = phi * x + gamma * p.B * gaussian_bump_input(t);
        }
        CHECK((x - d.x->row(k + 1).transpose()).norm() < 1e-10);
    }
}

TEST_CASE("simulation rejects bad arguments") {
    const LinearPlant p = scenario_paper_system();
    CHECK_THROWS_AS(simulate_lti(p, bump(), quiet_noise(2, 4), 0.05, 0.1, 1, Vector::Zero(2)), ValidationError);
    CHECK_THROWS_AS(simulate_lti(p, bump(), quiet_noise(3, 4), 5.0, 0.1, 1, Vector::Zero(2)), ValidationError);
    CHECK_THROWS_AS(simulate_lti(p, bump(), quiet_noise(2, 4), 5.0, 0.1, 1, Vector::Zero(3)), ValidationError);
}

TEST_CASE("sum of squared errors") {
    Matrix a(2, 2), b(2, 2);
    a << 1, 2,
         3, 4;
    b << 1, 1,
         1, 1;
    CHECK(sse(a, b) == 14.0);
    CHECK(sse(a, a) == 0.0);
    CHECK_THROWS_AS(sse(a, Matrix::Zero(3, 2)), ValidationError);
}

TEST_CASE("median puts failed cells last") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({std::nan(""), 1.0, 2.0}) == 2.0);
    CHECK_THROWS_AS(median({}), ValidationError);
}

TEST_CASE("benchmark grid record count and per-cell seeds") {
    BenchmarkConfig cfg;
    cfg.settings = default_settings(make_scenario("paper_system"));
    cfg.settings.T = 3.0;
    cfg.seeds = 10;
    const auto records = benchmark_suite(cfg);
    CHECK(records.size() == 200);
    std::set<std::uint64_t> seeds;
    for (const auto& r : records) seeds.insert(r.seed);
    CHECK(seeds.size() == 50);
}

TEST_CASE("suites give identical records serially and in parallel") {
    EmbeddingSweepConfig cfg;
    cfg.settings = default_settings(make_scenario("paper_system"));
    cfg.settings.T = 4.0;
    cfg.seeds = 2;
    const auto serial = embedding_sweep(cfg);
    cfg.settings.jobs = 4;
    const auto parallel = embedding_sweep(cfg);
    CHECK(serial.size() == 60);
    CHECK(serial == parallel);

    MismatchSweepConfig mc;
    mc.settings = cfg.settings;
    mc.seeds = 2;
    const auto m4 = mismatch_sweep(mc);
    mc.settings.jobs = 1;
    const auto m1 = mismatch_sweep(mc);
    CHECK(m1.dem.size() == 10 * 3 * 2);
    CHECK(m1.kf.size() == 3 * 2);
    CHECK(m1.dem == m4.dem);
    CHECK(m1.kf == m4.kf);
}

TEST_CASE("failed cells are recorded, not thrown") {
    BenchmarkConfig cfg;
    cfg.settings = default_settings(make_scenario("quadrotor"));
    cfg.settings.T = 1.0;
    cfg.s_values = {0.4};
    cfg.seeds = 1;
    cfg.methods = {Method::SA};
    const auto records = benchmark_suite(cfg);
    REQUIRE(records.size() == 1);
    CHECK(std::isnan(records[0].sse));
    CHECK_FALSE(records[0].error.empty());
}

TEST_CASE("free energy landscape curves") {
    const Scenario sc = make_scenario("paper_system");
    const StudySettings st = default_settings(sc);
    const Dataset data = simulate_scenario(sc, st, 0.5, 11);
    const auto grid = make_grid(0.05, 1.0, 0.025);
    CHECK(grid.size() == 39);
    const auto curves = fe_landscape(sc.plant, data, make_observer_config(st, sc.plant), grid, {5.0});
    REQUIRE(curves.size() == 1);
    const auto& c = curves[0];
    CHECK(c.F.size() == grid.size());
    CHECK(std::abs(c.argmax_s - 0.5) <= 0.15);
    CHECK(c.F.front() < *std::max_element(c.F.begin(), c.F.end()));
    CHECK(c.F.back() < *std::max_element(c.F.begin(), c.F.end()));
}

TEST_CASE("quadrant analysis is deterministic and mostly first quadrant") {
    const QuadrantResult a = quadrant_analysis(2000, 5, 6, 2, 4, true);
    const QuadrantResult b = quadrant_analysis(2000, 5, 6, 2, 4);
    CHECK(a.counts == b.counts);
    CHECK(a.samples.size() == 2000);
    CHECK(a.counts[0] + a.counts[1] + a.counts[2] + a.counts[3] + a.on_axis == 2000);
    CHECK(a.counts[0] > 1000);
    for (const auto& s : a.samples) {
        CHECK(s.s > 0.0);
        CHECK(s.s <= 1.0);
    }
}

TEST_CASE("no fourth quadrant points for a scalar second order embedding") {
    const QuadrantResult r = quadrant_analysis(20000, 1, 2, 1, 1);
    CHECK(r.counts[3] == 0);
}

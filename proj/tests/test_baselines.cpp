#include <doctest.h>

#include <cmath>

#include "dems/baselines.hpp"
#include "dems/errors.hpp"
#include "dems/experiments.hpp"
#include "support.hpp"

using namespace dems;
using testing::Gen;

namespace {

// Trajectory of the discrete model with optional Gaussian noise.
Dataset discrete_run(const DiscretePlant& dp, const Vector& x0, Eigen::Index count, double q_std, double r_std,
                     std::uint64_t seed) {
    Gen g(seed);
    const Eigen::Index n = dp.Ad.rows(), m = dp.C.rows(), r = dp.Bd.cols();
    Dataset d;
    d.dt = dp.dt;
    d.times = Vector::LinSpaced(count, 0.0, dp.dt * static_cast<double>(count - 1));
    d.y.resize(count, m);
    d.v.resize(count, r);
    Matrix x(count, n);
    Vector state = x0;
    for (Eigen::Index k = 0; k < count; ++k) {
        d.v.row(k) = std::sin(0.3 * static_cast<double>(k)) * Vector::Ones(r).transpose();
        x.row(k) = state.transpose();
        Vector z(m);
        for (Eigen::Index i = 0; i < m; ++i) z(i) = r_std * g.normal();
        d.y.row(k) = (dp.C * state + z).transpose();
        Vector w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = q_std * g.normal();
        state = dp.Ad * state + dp.Bd * d.v.row(k).transpose() + w;
    }
    d.x = x;
    return d;
}

LinearPlant oscillator() {
    LinearPlant p;
    p.A.resize(2, 2);
    p.A << 0, 1,
           -2, -0.5;
    p.B.resize(2, 1);
    p.B << 0, 1;
    p.C.resize(1, 2);
    p.C << 1, 0;
    return p;
}

} // namespace

TEST_CASE("discretization of a zero drift matrix") {
    LinearPlant p;
    p.A = Matrix::Zero(2, 2);
    p.B = Matrix::Ones(2, 1);
    p.C = Matrix::Ones(1, 2);
    const DiscretePlant d = discretize_lti(p, 0.2, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
    CHECK(d.Ad == Matrix::Identity(2, 2));
    CHECK(testing::max_abs(d.Bd - 0.2 * p.B) < 1e-15);
    CHECK(testing::max_abs(d.Qd - 0.2 * Matrix::Identity(2, 2)) < 1e-15);
    CHECK(d.Rd == Matrix::Identity(1, 1));
}

TEST_CASE("discretization of a scalar system") {
    LinearPlant p;
    p.A = Matrix::Constant(1, 1, -0.7);
    p.B = Matrix::Constant(1, 1, 2.0);
    p.C = Matrix::Constant(1, 1, 1.0);
    const DiscretePlant d = discretize_lti(p, 0.3, Matrix::Identity(1, 1), Matrix::Identity(1, 1));
    CHECK(d.Ad(0, 0) == doctest::Approx(std::exp(-0.21)).epsilon(1e-14));
    CHECK(d.Bd(0, 0) == doctest::Approx(2.0 * (std::exp(-0.21) - 1.0) / -0.7).epsilon(1e-12));
}

TEST_CASE("discretized input gain matches quadrature") {
    Gen g(51);
    for (int trial = 0; trial < 10; ++trial) {
        LinearPlant p;
        p.A = g.stable(2);
        p.B = g.matrix(2, 1);
        p.C = g.matrix(1, 2);
        const double dt = g.uniform(0.05, 0.5);
        const DiscretePlant d = discretize_lti(p, dt, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
        // Composite Simpson rule on e^{A tau} B.
        const int intervals = 200;
        const double h = dt / intervals;
        Matrix acc = Matrix::Zero(2, 1);
        for (int i = 0; i <= intervals; ++i) {
            const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * expm(p.A * (i * h)) * p.B;
        }
        acc *= h / 3.0;
        CHECK(testing::max_abs(d.Bd - acc) < 1e-8);
    }
}

TEST_CASE("noiseless Kalman filter converges to the true state") {
    const LinearPlant p = oscillator();
    const DiscretePlant d = discretize_lti(p, 0.1, 1e-14 * Matrix::Identity(2, 2), 1e-12 * Matrix::Identity(1, 1));
    Vector x0(2);
    x0 << 1.0, -1.0;
    const Dataset data = discrete_run(d, x0, 80, 0.0, 0.0, 1);
    const TrialResult r = run_kf(data, d);
    for (Eigen::Index k = 50; k < 80; ++k) {
        CHECK((r.estimates.row(k) - data.x->row(k)).norm() < 1e-6);
    }
}

TEST_CASE("scalar Kalman filter reaches the Riccati fixed point") {
    LinearPlant p;
    p.A = Matrix::Zero(1, 1);
    p.B = Matrix::Zero(1, 1);
    p.C = Matrix::Constant(1, 1, 1.0);
    const DiscretePlant d = discretize_lti(p, 1.0, Matrix::Identity(1, 1), Matrix::Identity(1, 1));
    // Posterior variance fixed point of P = (P + q) r / (P + q + r).
    double P = 1.0;
    for (int i = 0; i < 1000; ++i) P = (P + 1.0) / (P + 2.0);
    CHECK(P == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));

    const Eigen::Index count = 200000;
    const Dataset data = discrete_run(d, Vector::Zero(1), count, 1.0, 1.0, 2);
    const TrialResult r = run_kf(data, d);
    const Vector err = (r.estimates - *data.x).col(0).tail(count - 100);
    const double var = err.squaredNorm() / static_cast<double>(err.size());
    CHECK(std::abs(var - P) < 0.03 * P);
}

TEST_CASE("Kalman filter is deterministic and rejects mismatched data") {
    const LinearPlant p = oscillator();
    const DiscretePlant d = discretize_lti(p, 0.1, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
    const Dataset data = discrete_run(d, Vector::Ones(2), 100, 0.1, 0.1, 3);
    CHECK(run_kf(data, d).estimates == run_kf(data, d).estimates);
    const DiscretePlant other = discretize_lti(p, 0.05, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
    CHECK_THROWS_AS(run_kf(data, other), ValidationError);
}

TEST_CASE("AR(1) fit is the lag-one correlation") {
    Matrix gamma(2, 2);
    gamma << 2.0, 1.2,
             1.0, -0.3;
    const ArModel ar = fit_ar(gamma, 1);
    CHECK(ar.coeffs(0, 0) == doctest::Approx(0.6));
    CHECK(ar.coeffs(1, 0) == doctest::Approx(-0.3));
    CHECK(ar.innovation_var(0) == doctest::Approx(2.0 - 0.6 * 1.2));
}

TEST_CASE("AR fit of white noise has zero coefficients") {
    Matrix gamma = Matrix::Zero(1, 7);
    gamma(0, 0) = 3.0;
    const ArModel ar = fit_ar(gamma, 6);
    CHECK(ar.coeffs.isZero());
    CHECK(ar.innovation_var(0) == doctest::Approx(3.0));
}

TEST_CASE("AR fit recovers a known AR(2) process") {
    const double a1 = 0.5, a2 = -0.3, var = 1.0;
    const double g0 = var * (1 - a2) / ((1 + a2) * ((1 - a2) * (1 - a2) - a1 * a1));
    const double g1 = a1 * g0 / (1 - a2);
    const double g2 = a1 * g1 + a2 * g0;
    Matrix gamma(1, 3);
    gamma << g0, g1, g2;
    const ArModel ar = fit_ar(gamma, 2);
    CHECK(std::abs(ar.coeffs(0, 0) - a1) < 1e-6);
    CHECK(std::abs(ar.coeffs(0, 1) - a2) < 1e-6);
    CHECK(std::abs(ar.innovation_var(0) - var) < 1e-6);
    CHECK(ar.spectral_radius() < 1.0);
}

TEST_CASE("AR(1) fit of the Gaussian autocovariance") {
    for (double s : {0.1, 0.4, 0.9}) {
        const double dt = 0.05;
        const Matrix gamma = gaussian_autocovariance(Vector::Constant(1, 0.7), s, dt, 1);
        const ArModel ar = fit_ar(gamma, 1);
        CHECK(std::abs(ar.coeffs(0, 0) - std::exp(-dt * dt / (4 * s * s))) < 1e-12);
    }
}

TEST_CASE("AR fit rejects a singular Toeplitz system") {
    const Matrix gamma = Matrix::Constant(1, 3, 1.0);
    CHECK_THROWS_AS(fit_ar(gamma, 2), ConditioningError);
    CHECK_THROWS(fit_ar(Matrix::Constant(1, 2, 1.0), 0));
}

TEST_CASE("state augmentation dimensions") {
    CHECK(augmented_dimension(2, 6) == 14);
    CHECK(augmented_dimension(3, 1) == 6);
}

TEST_CASE("state augmentation with zero AR coefficients matches the Kalman filter") {
    const LinearPlant p = oscillator();
    const DiscretePlant d = discretize_lti(p, 0.1, 0.01 * Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1));
    const Dataset data = discrete_run(d, Vector::Ones(2), 300, 0.03, 0.1, 4);
    ArModel ar;
    ar.order = 6;
    ar.coeffs = Matrix::Zero(2, 6);
    ar.innovation_var = d.Qd.diagonal();
    const double sa = *run_sa(data, d, ar).sse;
    const double kf = *run_kf(data, d).sse;
    CHECK(std::abs(sa - kf) <= 0.01 * kf);
}

TEST_CASE("state augmentation rejects an unstable AR model") {
    const LinearPlant p = oscillator();
    const DiscretePlant d = discretize_lti(p, 0.1, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
    const Dataset data = discrete_run(d, Vector::Ones(2), 20, 0.1, 0.1, 5);
    ArModel ar;
    ar.order = 1;
    ar.coeffs = Matrix::Constant(2, 1, 1.5);
    ar.innovation_var = Vector::Ones(2);
    CHECK_THROWS_AS(run_sa(data, d, ar), ValidationError);
    CHECK_THROWS_AS(run_smikf(data, d, ar), ValidationError);
}

TEST_CASE("SMIKF with zero correlation is the Kalman filter") {
    const LinearPlant p = oscillator();
    const DiscretePlant d = discretize_lti(p, 0.1, 0.01 * Matrix::Identity(2, 2), 0.01 * Matrix::Identity(1, 1));
    const Dataset data = discrete_run(d, Vector::Ones(2), 300, 0.03, 0.1, 6);
    ArModel ar;
    ar.order = 1;
    ar.coeffs = Matrix::Zero(2, 1);
    ar.innovation_var = d.Qd.diagonal();
    const TrialResult a = run_smikf(data, d, ar);
    const TrialResult b = run_kf(data, d);
    CHECK(testing::max_abs(a.estimates - b.estimates) <= 1e-12);
}

TEST_CASE("baselines on near-white data") {
    const Scenario sc = make_scenario("paper_system");
    StudySettings st = default_settings(sc);
    const double s = 0.1 * st.dt;
    for (int seed = 0; seed < 5; ++seed) {
        const Dataset data = simulate_scenario(sc, st, s, cell_seed(7, 0, static_cast<std::size_t>(seed)));
        const TrialResult sa = run_method(Method::SA, sc.plant, data, st, s);
        const TrialResult smikf = run_method(Method::SMIKF, sc.plant, data, st, s);
        CHECK(testing::max_abs(sa.estimates - smikf.estimates) <= 1e-9);
    }
}

TEST_CASE("SMIKF beats the Kalman filter on colored noise") {
    BenchmarkConfig cfg;
    cfg.settings = default_settings(make_scenario("paper_system"));
    cfg.settings.dt = 0.05;
    cfg.s_values = {0.3};
    cfg.seeds = 10;
    cfg.methods = {Method::KF, Method::SMIKF};
    const auto records = benchmark_suite(cfg);
    const double kf = median_sse(records, [](const BenchmarkRecord& r) { return r.method == "KF"; });
    const double smikf = median_sse(records, [](const BenchmarkRecord& r) { return r.method == "SMIKF"; });
    CHECK(smikf < kf);
}

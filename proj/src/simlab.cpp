#include "dems/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dems/errors.hpp"

namespace dems {

void Dataset::validate() const {
    const Eigen::Index count = times.size();
    require(count >= 1, "dataset: no samples");
    require(dt > 0.0 && std::isfinite(dt), "dataset: dt must be positive");
    require(y.rows() == count && v.rows() == count, "dataset: y and v must have one row per sample");
    require(!x || x->rows() == count, "dataset: truth x must have one row per sample");
    require(!w || w->rows() == count, "dataset: truth w must have one row per sample");
    require(!z || (z->rows() == count && z->cols() == y.cols()), "dataset: truth z must match y");
    require(!x || !w || x->cols() == w->cols(), "dataset: x and w widths differ");
    for (Eigen::Index k = 1; k < count; ++k) {
        const double step = times(k) - times(k - 1);
        require(std::abs(step - dt) <= 1e-6 * dt, "dataset: time grid is not uniform");
    }
}

LinearPlant scenario_paper_system() {
    LinearPlant plant;
    plant.A.resize(2, 2);
    plant.A << 0.0484, 0.7535,
              -0.7617, -0.2187;
    plant.B.resize(2, 1);
    plant.B << 0.3604,
               0.0776;
    plant.C.resize(4, 2);
    plant.C << 0.2265, -0.4786,
               0.4066, -0.2641,
               0.3871, 0.3817,
              -0.1630, -0.9290;
    return plant;
}

namespace {

constexpr double kRollInertia = 3.4e-3;       // kg m^2
constexpr double kRollThrustCoeff = 1.274e-3; // N m

} // namespace

LinearPlant scenario_quadrotor() {
    const double gain = kRollThrustCoeff / kRollInertia;
    LinearPlant plant;
    plant.A.resize(2, 2);
    plant.A << 0.0, 1.0,
               0.0, 0.0;
    plant.B.resize(2, 4);
    plant.B << 0.0, 0.0, 0.0, 0.0,
               gain, -gain, -gain, gain;
    plant.C.resize(1, 2);
    plant.C << 1.0, 0.0;
    return plant;
}

Vector gaussian_bump_input(double t) {
    Vector v(1);
    v(0) = std::exp(-0.25 * (t - 12.0) * (t - 12.0));
    return v;
}

Matrix isotropic_precision(double log_prec, Eigen::Index dim) {
    return std::exp(log_prec) * Matrix::Identity(dim, dim);
}

Scenario make_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "paper_system") {
        sc.plant = scenario_paper_system();
        sc.input = [](double t, const Vector&) { return gaussian_bump_input(t); };
        sc.dt = 0.1;
        sc.T = 32.0;
        sc.log_prec_w = 6.0;
        sc.log_prec_z = 6.0;
        sc.p = 6;
        sc.d = 2;
        return sc;
    }
    if (name == "quadrotor") {
        sc.plant = scenario_quadrotor();
        // Hover controller: PD on roll tracking a slow reference, mapped onto
        // the differential motor pattern [1, -1, -1, 1] / 4.
        sc.input = [](double t, const Vector& x) {
            const double gain = kRollThrustCoeff / kRollInertia;
            constexpr double omega = 4.0;
            constexpr double zeta = 0.7;
            const double reference = 0.05 * std::sin(2.0 * std::numbers::pi * 0.3 * t);
            const double accel = -omega * omega * (x(0) - reference) - 2.0 * zeta * omega * x(1);
            const double u = accel / gain / 4.0;
            Vector v(4);
            v << u, -u, -u, u;
            return v;
        };
        sc.dt = 0.0083;
        sc.T = 15.0;
        sc.log_prec_w = 4.0;
        sc.log_prec_z = 10.0;
        sc.p = 2;
        sc.d = 2;
        return sc;
    }
    throw ValidationError("unknown scenario '" + name + "'");
}

Dataset simulate_lti(const LinearPlant& plant, const InputFn& input, const NoiseSpec& noise,
                     double T, double dt, std::uint64_t seed, const Vector& x0) {
    plant.validate();
    noise.validate();
    require(dt > 0.0 && T > dt, "simulate_lti: need T > dt > 0");
    require(noise.prec_w.rows() == plant.n(), "simulate_lti: process precision must be n x n");
    require(noise.prec_z.rows() == plant.m(), "simulate_lti: measurement precision must be m x m");
    require(x0.size() == plant.n(), "simulate_lti: x0 must have n entries");

    constexpr int kSubsteps = 10;
    const auto count = static_cast<Eigen::Index>(std::floor(T / dt + 1e-9)) + 1;
    const double h = dt / kSubsteps;
    const Eigen::Index fine_count = (count - 1) * kSubsteps + 1;

    NoiseSpec seeded = noise;
    seeded.seed = seed;
    const Matrix w = generate_colored_noise(static_cast<std::size_t>(fine_count), h, seeded,
                                            NoiseChannel::Process);
    const Matrix z = generate_colored_noise(static_cast<std::size_t>(count), dt, seeded,
                                            NoiseChannel::Measurement);
    const ExactDiscretization disc = discretize_exact(plant.A, h);

    Dataset data;
    data.dt = dt;
    data.times.resize(count);
    data.y.resize(count, plant.m());
    data.v.resize(count, plant.r());
    data.x = Matrix(count, plant.n());
    data.w = Matrix(count, plant.n());
    data.z = z;

    Vector x = x0;
    for (Eigen::Index k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * dt;
        data.times(k) = t;
        const Vector v = input(t, x);
        require(v.size() == plant.r(), "simulate_lti: input function returned the wrong width");
        data.v.row(k) = v.transpose();
        data.x->row(k) = x.transpose();
        data.w->row(k) = w.row(k * kSubsteps);
        data.y.row(k) = (plant.C * x + z.row(k).transpose()).transpose();
        if (k + 1 == count) {
            break;
        }
        for (int j = 0; j < kSubsteps; ++j) {
            const Eigen::Index idx = k * kSubsteps + j;
            const double tj = static_cast<double>(idx) * h;
            const Vector vj = j == 0 ? v : input(tj, x);
            x = disc.transition * x + disc.input_gain * (plant.B * vj + w.row(idx).transpose());
        }
        if (!x.allFinite()) {
            throw DivergenceError("simulate_lti: non-finite state", static_cast<std::size_t>(k + 1));
        }
    }
    return data;
}

double sse(const Matrix& estimates, const Matrix& truth) {
    require(estimates.rows() == truth.rows() && estimates.cols() == truth.cols(),
            "sse: shape mismatch");
    return (estimates - truth).squaredNorm();
}

double median(std::vector<double> values) {
    require(!values.empty(), "median: empty sample");
    std::sort(values.begin(), values.end(), [](double a, double b) {
        // NaN (failed cells) sorts last.
        if (std::isnan(a)) return false;
        if (std::isnan(b)) return true;
        return a < b;
    });
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

} // namespace dems

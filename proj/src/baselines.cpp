#include "dems/baselines.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "dems/errors.hpp"

namespace dems {

DiscretePlant discretize_lti(const LinearPlant& plant, double dt, const Matrix& process_cov,
                             const Matrix& measurement_cov) {
    plant.validate();
    require(dt > 0.0, "discretize_lti: dt must be positive");
    require(process_cov.rows() == plant.n() && process_cov.cols() == plant.n(),
            "discretize_lti: process covariance must be n x n");
    require(measurement_cov.rows() == plant.m() && measurement_cov.cols() == plant.m(),
            "discretize_lti: measurement covariance must be m x m");
    const ExactDiscretization disc = discretize_exact(plant.A, dt);
    DiscretePlant d;
    d.Ad = disc.transition;
    d.Bd = disc.input_gain * plant.B;
    d.C = plant.C;
    d.Qd = process_cov * dt;
    d.Rd = measurement_cov;
    d.dt = dt;
    return d;
}

double ArModel::spectral_radius() const {
    double radius = 0.0;
    for (Eigen::Index c = 0; c < coeffs.rows(); ++c) {
        Matrix companion = Matrix::Zero(order, order);
        companion.row(0) = coeffs.row(c);
        for (int i = 1; i < order; ++i) {
            companion(i, i - 1) = 1.0;
        }
        Eigen::EigenSolver<Matrix> es(companion, false);
        radius = std::max(radius, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    return radius;
}

ArModel fit_ar(const Matrix& autocovariance, int order) {
    require(order >= 1, "fit_ar: order must be at least 1");
    require(autocovariance.cols() >= order + 1, "fit_ar: need autocovariances at lags 0..q");
    ArModel ar;
    ar.order = order;
    ar.coeffs.resize(autocovariance.rows(), order);
    ar.innovation_var.resize(autocovariance.rows());
    for (Eigen::Index c = 0; c < autocovariance.rows(); ++c) {
        const auto gamma = autocovariance.row(c);
        require(gamma(0) > 0.0, "fit_ar: gamma(0) must be positive");
        Matrix toeplitz(order, order);
        for (int i = 0; i < order; ++i) {
            for (int j = 0; j < order; ++j) {
                toeplitz(i, j) = gamma(std::abs(i - j));
            }
        }
        const Vector rhs = gamma.segment(1, order).transpose();
        Eigen::FullPivLU<Matrix> lu(toeplitz);
        if (!lu.isInvertible()) {
            throw ConditioningError("fit_ar: Toeplitz system is singular");
        }
        const Vector a = lu.solve(rhs);
        if (!a.allFinite()) {
            throw ConditioningError("fit_ar: Toeplitz system is singular");
        }
        ar.coeffs.row(c) = a.transpose();
        ar.innovation_var(c) = gamma(0) - a.dot(rhs);
    }
    return ar;
}

Matrix gaussian_autocovariance(const Vector& variances, double s, double dt, int max_lag) {
    require(s > 0.0 && dt > 0.0, "gaussian_autocovariance: s and dt must be positive");
    Matrix out(variances.size(), max_lag + 1);
    for (int k = 0; k <= max_lag; ++k) {
        const double h = k * dt;
        out.col(k) = variances * std::exp(-h * h / (4.0 * s * s));
    }
    return out;
}

Eigen::Index augmented_dimension(Eigen::Index n, int order) {
    return n * (1 + order);
}

namespace {

void check_dataset(const Dataset& data, const DiscretePlant& dp) {
    data.validate();
    require(data.y.cols() == dp.C.rows(), "filter: dataset output width does not match the plant");
    require(data.v.cols() == dp.Bd.cols(), "filter: dataset input width does not match the plant");
    require(std::abs(data.dt - dp.dt) <= 1e-9 * dp.dt, "filter: dataset dt does not match the plant");
}

void symmetrize(Matrix& m) {
    m = 0.5 * (m + m.transpose());
}

// Generic linear Kalman recursion on a (possibly augmented) model. The
// first `report` state entries are written to the estimates.
struct FilterModel {
    Matrix F;
    Matrix G; // input gain
    Matrix H;
    Matrix Q;
    Matrix R;
};

TrialResult kalman_recursion(const Dataset& data, const FilterModel& model, Eigen::Index report,
                             double initial_cov) {
    const Eigen::Index dim = model.F.rows();
    const Eigen::Index count = data.size();
    Vector x = Vector::Zero(dim);
    Matrix P = initial_cov * Matrix::Identity(dim, dim);
    const Matrix eye = Matrix::Identity(dim, dim);

    TrialResult out;
    out.estimates.resize(count, report);
    for (Eigen::Index k = 0; k < count; ++k) {
        if (k > 0) {
            x = model.F * x + model.G * data.v.row(k - 1).transpose();
            P = model.F * P * model.F.transpose() + model.Q;
            symmetrize(P);
        }
        const Matrix S = model.H * P * model.H.transpose() + model.R;
        Eigen::LLT<Matrix> llt(S);
        if (llt.info() != Eigen::Success) {
            throw DivergenceError("Kalman filter: innovation covariance is not positive definite",
                                  static_cast<std::size_t>(k));
        }
        const Matrix K = llt.solve(model.H * P).transpose();
        x += K * (data.y.row(k).transpose() - model.H * x);
        const Matrix ikh = eye - K * model.H;
        P = ikh * P * ikh.transpose() + K * model.R * K.transpose();
        symmetrize(P);
        if (!x.allFinite()) {
            throw DivergenceError("Kalman filter: non-finite state", static_cast<std::size_t>(k));
        }
        out.estimates.row(k) = x.head(report).transpose();
    }
    if (data.x) {
        out.sse = sse(out.estimates, *data.x);
    }
    return out;
}

} // namespace

TrialResult run_kf(const Dataset& data, const DiscretePlant& dplant, KalmanOptions opts) {
    check_dataset(data, dplant);
    const FilterModel model{dplant.Ad, dplant.Bd, dplant.C, dplant.Qd, dplant.Rd};
    return kalman_recursion(data, model, dplant.Ad.rows(), opts.initial_cov);
}

TrialResult run_sa(const Dataset& data, const DiscretePlant& dplant, const ArModel& ar,
                   KalmanOptions opts) {
    check_dataset(data, dplant);
    const Eigen::Index n = dplant.Ad.rows();
    require(ar.channels() == n, "SA: AR model must have one channel per state");
    require(ar.order >= 1, "SA: AR order must be at least 1");
    if (!(ar.spectral_radius() < 1.0)) {
        throw ValidationError("SA: AR companion matrix is not stable");
    }
    require((ar.innovation_var.array() >= 0.0).all(), "SA: innovation variance must be non-negative");

    // State [x_k; w_{k-1}; ...; w_{k-q}]. x_{k+1} = Ad x_k + Bd v_k + w_k and
    // w_k = sum_i a_i w_{k-i} + xi_k, so both rows share the innovation.
    const int q = ar.order;
    const Eigen::Index dim = augmented_dimension(n, q);
    FilterModel model;
    model.F = Matrix::Zero(dim, dim);
    model.F.topLeftCorner(n, n) = dplant.Ad;
    for (int i = 0; i < q; ++i) {
        const Matrix a_i = ar.coeffs.col(i).asDiagonal();
        model.F.block(0, n + i * n, n, n) = a_i;
        model.F.block(n, n + i * n, n, n) = a_i;
    }
    for (int i = 1; i < q; ++i) {
        model.F.block(n + i * n, n + (i - 1) * n, n, n) = Matrix::Identity(n, n);
    }
    model.G = Matrix::Zero(dim, dplant.Bd.cols());
    model.G.topRows(n) = dplant.Bd;
    model.H = Matrix::Zero(dplant.C.rows(), dim);
    model.H.leftCols(n) = dplant.C;

    // Innovation covariance keeps the cross-channel structure of Qd with
    // the per-channel innovation variances on the diagonal.
    const Vector qd_diag = dplant.Qd.diagonal();
    const Vector scale = (ar.innovation_var.array() / qd_diag.array()).sqrt();
    const Matrix q_xi = scale.asDiagonal() * dplant.Qd * scale.asDiagonal();
    Matrix gmap = Matrix::Zero(dim, n);
    gmap.topRows(n) = Matrix::Identity(n, n);
    gmap.middleRows(n, n) = Matrix::Identity(n, n);
    model.Q = gmap * q_xi * gmap.transpose();
    model.R = dplant.Rd;
    return kalman_recursion(data, model, n, opts.initial_cov);
}

TrialResult run_smikf(const Dataset& data, const DiscretePlant& dplant, const ArModel& ar,
                      KalmanOptions opts) {
    check_dataset(data, dplant);
    const Eigen::Index n = dplant.Ad.rows();
    require(ar.order == 1, "SMIKF: AR order must be 1");
    require(ar.channels() == n, "SMIKF: AR model must have one channel per state");
    const Matrix phi = ar.coeffs.col(0).asDiagonal();
    if (!(ar.spectral_radius() < 1.0)) {
        throw ValidationError("SMIKF: AR(1) coefficient matrix is not stationary");
    }
    // Stationary AR(1) covariance: Sigma_w = phi Sigma_w phi' + Q_xi.
    const Vector qd_diag = dplant.Qd.diagonal();
    const Vector scale = (ar.innovation_var.array() / qd_diag.array()).sqrt();
    const Matrix q_xi = scale.asDiagonal() * dplant.Qd * scale.asDiagonal();
    Matrix sigma_w = q_xi;
    for (int it = 0; it < 100000; ++it) {
        Matrix next = phi * sigma_w * phi.transpose() + q_xi;
        const double change = (next - sigma_w).cwiseAbs().maxCoeff();
        sigma_w = std::move(next);
        if (change <= 1e-15 * std::max(1e-300, sigma_w.cwiseAbs().maxCoeff())) {
            break;
        }
    }

    const Eigen::Index count = data.size();
    const Matrix eye = Matrix::Identity(n, n);
    Vector x = Vector::Zero(n);
    Matrix P = opts.initial_cov * eye;
    Matrix M = Matrix::Zero(n, n);

    TrialResult out;
    out.estimates.resize(count, n);
    for (Eigen::Index k = 0; k < count; ++k) {
        Matrix prior_cross = Matrix::Zero(n, n);
        if (k > 0) {
            x = dplant.Ad * x + dplant.Bd * data.v.row(k - 1).transpose();
            const Matrix am = dplant.Ad * M;
            P = dplant.Ad * P * dplant.Ad.transpose() + am + am.transpose() + sigma_w;
            symmetrize(P);
            prior_cross = am + sigma_w;
        }
        const Matrix S = dplant.C * P * dplant.C.transpose() + dplant.Rd;
        Eigen::LLT<Matrix> llt(S);
        if (llt.info() != Eigen::Success) {
            throw DivergenceError("SMIKF: innovation covariance is not positive definite",
                                  static_cast<std::size_t>(k));
        }
        const Matrix K = llt.solve(dplant.C * P).transpose();
        x += K * (data.y.row(k).transpose() - dplant.C * x);
        const Matrix ikh = eye - K * dplant.C;
        P = ikh * P * ikh.transpose() + K * dplant.Rd * K.transpose();
        symmetrize(P);
        M = k > 0 ? Matrix(ikh * prior_cross * phi.transpose()) : Matrix::Zero(n, n);
        if (!x.allFinite()) {
            throw DivergenceError("SMIKF: non-finite state", static_cast<std::size_t>(k));
        }
        out.estimates.row(k) = x.transpose();
    }
    if (data.x) {
        out.sse = sse(out.estimates, *data.x);
    }
    return out;
}

} // namespace dems

#include "dems/gencoord.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dems/errors.hpp"

namespace dems {

void LinearPlant::validate() const {
    require(A.rows() > 0 && A.rows() == A.cols(), "plant: A must be square and non-empty");
    require(B.rows() == A.rows() && B.cols() > 0, "plant: B must have n rows and at least one column");
    require(C.cols() == A.rows() && C.rows() > 0, "plant: C must have n columns and at least one row");
    require(A.allFinite() && B.allFinite() && C.allFinite(), "plant: matrices must be finite");
}

GeneralizedVector::GeneralizedVector(Eigen::Index base_dim, int order)
    : GeneralizedVector(base_dim, order, Vector::Zero((order + 1) * base_dim)) {}

GeneralizedVector::GeneralizedVector(Eigen::Index base_dim, int order, Vector values)
    : base_dim_(base_dim), order_(order), values_(std::move(values)) {
    require(base_dim >= 1, "generalized vector: base_dim must be positive");
    require(order >= 0, "generalized vector: order must be non-negative");
    require(values_.size() == (order + 1) * base_dim,
            "generalized vector: length must equal (order+1)*base_dim");
}

Matrix shift_matrix(int p, Eigen::Index block_dim) {
    require(p >= 0, "shift_matrix: order p must be non-negative");
    require(block_dim >= 1, "shift_matrix: block_dim must be positive");
    Matrix upper = Matrix::Zero(p + 1, p + 1);
    for (int i = 0; i < p; ++i) {
        upper(i, i + 1) = 1.0;
    }
    return kron(upper, Matrix::Identity(block_dim, block_dim));
}

GeneralizedSystem lift_system(const LinearPlant& plant, int p, int d) {
    plant.validate();
    require(p >= 0 && d >= 0, "lift_system: embedding orders must be non-negative");
    require(d <= p, "lift_system: input order d must not exceed state order p");

    GeneralizedSystem g;
    g.plant = plant;
    g.p = p;
    g.d = d;
    const Matrix eye = Matrix::Identity(p + 1, p + 1);
    g.A_gen = kron(eye, plant.A);
    g.C_gen = kron(eye, plant.C);
    g.B_gen = kron(Matrix::Identity(p + 1, d + 1), plant.B);
    g.Dx = shift_matrix(p, plant.n());
    return g;
}

namespace {

Matrix taylor_matrix(Eigen::Index len, double dt, int q, int center) {
    Matrix e(len, q + 1);
    for (Eigen::Index i = 0; i < len; ++i) {
        const double h = static_cast<double>(i - center) * dt;
        double term = 1.0;
        for (int j = 0; j <= q; ++j) {
            if (j > 0) {
                term *= h / j;
            }
            e(i, j) = term;
        }
    }
    return e;
}

// Maps a window (len x channels) to derivatives ((q+1) x channels).
Matrix embedding_operator(Eigen::Index len, double dt, int q, int center) {
    const Matrix e = taylor_matrix(len, dt, q, center);
    if (len == q + 1) {
        Eigen::FullPivLU<Matrix> lu(e);
        if (!lu.isInvertible()) {
            throw ConditioningError("taylor_embed: Taylor matrix is singular");
        }
        return lu.inverse();
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(e);
    if (qr.rank() < q + 1) {
        throw ConditioningError("taylor_embed: Taylor matrix is rank deficient");
    }
    return qr.solve(Matrix::Identity(len, len));
}

GeneralizedVector flatten(const Matrix& derivs) {
    // derivs is (q+1) x channels; derivative-major flattening = row by row.
    const Eigen::Index channels = derivs.cols();
    const int q = static_cast<int>(derivs.rows()) - 1;
    Vector values(derivs.size());
    for (int k = 0; k <= q; ++k) {
        values.segment(k * channels, channels) = derivs.row(k).transpose();
    }
    return GeneralizedVector(channels, q, std::move(values));
}

} // namespace

GeneralizedVector taylor_embed(const Matrix& window, double dt, int q, int center) {
    require(q >= 0, "taylor_embed: order must be non-negative");
    require(dt > 0.0 && std::isfinite(dt), "taylor_embed: dt must be positive");
    require(window.rows() >= q + 1, "taylor_embed: window shorter than q+1 samples");
    require(center >= 0 && center < window.rows(), "taylor_embed: center index out of range");
    require(window.cols() >= 1, "taylor_embed: window has no channels");
    const Matrix op = embedding_operator(window.rows(), dt, q, center);
    return flatten(op * window);
}

Matrix taylor_reconstruct(const GeneralizedVector& derivs, Eigen::Index window_len, double dt,
                          int center) {
    const int q = derivs.order();
    const Eigen::Index channels = derivs.base_dim();
    Matrix stacked(q + 1, channels);
    for (int k = 0; k <= q; ++k) {
        stacked.row(k) = derivs.block(k).transpose();
    }
    return taylor_matrix(window_len, dt, q, center) * stacked;
}

std::vector<GeneralizedVector> embed_sequence(const Matrix& samples, double dt, int q) {
    require(q >= 0, "embed_sequence: order must be non-negative");
    require(dt > 0.0, "embed_sequence: dt must be positive");
    const Eigen::Index count = samples.rows();
    const Eigen::Index len = q + 1;
    require(count >= len, "embed_sequence: sequence shorter than the embedding window");

    // One operator per possible center position within the window.
    std::vector<Matrix> ops;
    ops.reserve(static_cast<std::size_t>(len));
    for (Eigen::Index c = 0; c < len; ++c) {
        ops.push_back(embedding_operator(len, dt, q, static_cast<int>(c)));
    }

    const Eigen::Index half = q / 2;
    std::vector<GeneralizedVector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index k = 0; k < count; ++k) {
        Eigen::Index start = k - half;
        start = std::clamp<Eigen::Index>(start, 0, count - len);
        const Eigen::Index center = k - start;
        out.push_back(flatten(ops[static_cast<std::size_t>(center)] * samples.middleRows(start, len)));
    }
    return out;
}

} // namespace dems

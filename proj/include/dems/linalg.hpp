#pragma once

#include <Eigen/Dense>

namespace dems {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix kron(const Matrix& a, const Matrix& b);

/// Matrix exponential, Pade scaling-and-squaring.
Matrix expm(const Matrix& a);

bool all_finite(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol = 1e-12);
bool is_positive_definite(const Matrix& m);

/// Log-determinant of a symmetric positive definite matrix.
double log_det_spd(const Matrix& m);

/// Exact zero-order-hold discretization of x' = A x + u over one step of
/// length dt: x+ = transition * x + input_gain * u, where
/// input_gain = A^{-1}(e^{A dt} - I) = integral_0^dt e^{A tau} dtau.
struct ExactDiscretization {
    Matrix transition;
    Matrix input_gain;
    bool used_series = false;
};

enum class IntegralPath { Automatic, Inverse, Series };

/// When `path` is Automatic the inverse formula is used unless A's
/// reciprocal condition estimate is below 1e-12, in which case the
/// series dt * sum_k (A dt)^k / (k+1)! is evaluated instead (with
/// scaling and squaring so that large ||A dt|| stays accurate).
ExactDiscretization discretize_exact(const Matrix& a, double dt,
                                     IntegralPath path = IntegralPath::Automatic);

} // namespace dems

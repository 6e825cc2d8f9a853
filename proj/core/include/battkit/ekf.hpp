/*
 * ekf.hpp
 *
 * Extended Kalman filter: generic predict/update over user-supplied
 * transition and observation models, plus the scalar random-walk
 * specialization used to denoise cycler current and voltage columns.
 */

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "battkit/types.hpp"

namespace battkit::ekf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Nonlinear system model. f and jac_f take (state, control); h and jac_h
// take the state alone. q and r are the process and measurement noise
// covariances; r must be positive definite (it is inverted in the gain).
struct EkfModel {
  std::function<Vector(const Vector&, const Vector&)> f;
  std::function<Vector(const Vector&)> h;
  std::function<Matrix(const Vector&, const Vector&)> jac_f;
  std::function<Matrix(const Vector&)> jac_h;
  Matrix q;
  Matrix r;
};

struct EkfState {
  Vector x_hat;
  Matrix p;
};

struct UpdateResult {
  EkfState state;
  Vector residual;
};

// Prediction step: x <- f(x, u), P <- F P F^T + Q.
EkfState ekf_predict(const EkfState& state, const EkfModel& model, const Vector& control);

// Update step: K = P H^T (H P H^T + R)^-1, residual y = z - h(x),
// x <- x + K y, P <- (I - K H) P re-symmetrized as (P + P^T)/2.
// The observation Jacobian is evaluated at the predicted state.
// errors: SingularInnovation when H P H^T + R is not invertible.
UpdateResult ekf_update(const EkfState& state, const EkfModel& model, const Vector& z);

// Scalar random-walk model (f = identity, h = identity, control ignored)
// with noise variances q and r.
EkfModel random_walk_model(double q_scalar, double r_scalar);

// Runs the random-walk filter over a signal. The state initializes from the
// first measurement with variance r, so output[0] == samples[0].
// pre: samples non-empty, q_scalar >= 0, r_scalar > 0.
std::vector<double> denoise_signal(std::span<const double> samples, double q_scalar,
                                   double r_scalar);

struct NoiseParams {
  double q = 0.0;
  double r = 0.0;
};

// Data-driven defaults: r = var(first differences)/2, q = r/100. Falls back
// to r = 1e-6 for signals too short or too clean to estimate.
NoiseParams default_noise_params(std::span<const double> samples);

}  // namespace battkit::ekf

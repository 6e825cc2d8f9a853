#include "battkit/ekf.hpp"

#include <cmath>

namespace battkit::ekf {

namespace {

void check_square(const Matrix& m, Eigen::Index dim, const char* name) {
  if (m.rows() != dim || m.cols() != dim)
    throw Error(Errc::DimensionMismatch, std::string(name) + " has wrong dimensions");
}

}  // namespace

EkfState ekf_predict(const EkfState& state, const EkfModel& model, const Vector& control) {
  const Eigen::Index n = state.x_hat.size();
  check_square(state.p, n, "P");
  check_square(model.q, n, "Q");

  const Vector x_pred = model.f(state.x_hat, control);
  if (x_pred.size() != n) throw Error(Errc::DimensionMismatch, "f changed the state dimension");
  const Matrix f_jac = model.jac_f(state.x_hat, control);
  check_square(f_jac, n, "F");

  Matrix p_pred = f_jac * state.p * f_jac.transpose() + model.q;
  return EkfState{x_pred, std::move(p_pred)};
}

UpdateResult ekf_update(const EkfState& state, const EkfModel& model, const Vector& z) {
  const Eigen::Index n = state.x_hat.size();
  check_square(state.p, n, "P");

  const Matrix h_jac = model.jac_h(state.x_hat);
  if (h_jac.cols() != n) throw Error(Errc::DimensionMismatch, "H has wrong column count");
  const Eigen::Index m = h_jac.rows();
  check_square(model.r, m, "R");
  if (z.size() != m) throw Error(Errc::DimensionMismatch, "measurement has wrong dimension");

  const Matrix innovation_cov = h_jac * state.p * h_jac.transpose() + model.r;
  Eigen::FullPivLU<Matrix> lu(innovation_cov);
  if (!lu.isInvertible())
    throw Error(Errc::SingularInnovation, "innovation covariance is singular");

  const Matrix gain = state.p * h_jac.transpose() * lu.inverse();
  const Vector predicted_z = model.h(state.x_hat);
  if (predicted_z.size() != m) throw Error(Errc::DimensionMismatch, "h has wrong dimension");

  const Vector residual = z - predicted_z;
  UpdateResult out;
  out.state.x_hat = state.x_hat + gain * residual;
  Matrix p_post = (Matrix::Identity(n, n) - gain * h_jac) * state.p;
  out.state.p = 0.5 * (p_post + p_post.transpose());  // keep P symmetric
  out.residual = residual;
  return out;
}

EkfModel random_walk_model(double q_scalar, double r_scalar) {
  EkfModel model;
  model.f = [](const Vector& x, const Vector&) { return x; };
  model.h = [](const Vector& x) { return x; };
  model.jac_f = [](const Vector& x, const Vector&) { return Matrix::Identity(x.size(), x.size()); };
  model.jac_h = [](const Vector& x) { return Matrix::Identity(x.size(), x.size()); };
  model.q = Matrix::Constant(1, 1, q_scalar);
  model.r = Matrix::Constant(1, 1, r_scalar);
  return model;
}

std::vector<double> denoise_signal(std::span<const double> samples, double q_scalar,
                                   double r_scalar) {
  if (samples.empty()) throw Error(Errc::Empty, "denoise_signal: empty input");
  if (q_scalar < 0.0) throw Error(Errc::InvalidArgument, "denoise_signal: q must be >= 0");
  if (r_scalar <= 0.0) throw Error(Errc::InvalidArgument, "denoise_signal: r must be > 0");

  std::vector<double> out;
  out.reserve(samples.size());

  // Scalar fast path of the random-walk filter; algebra identical to
  // ekf_predict/ekf_update with f = h = identity.
  double x = samples[0];
  double p = r_scalar;
  out.push_back(x);
  for (std::size_t k = 1; k < samples.size(); ++k) {
    p += q_scalar;
    const double gain = p / (p + r_scalar);
    x += gain * (samples[k] - x);
    p *= 1.0 - gain;
    out.push_back(x);
  }
  return out;
}

NoiseParams default_noise_params(std::span<const double> samples) {
  NoiseParams params{1e-8, 1e-6};
  if (samples.size() < 3) return params;

  double mean = 0.0;
  const std::size_t n = samples.size() - 1;
  std::vector<double> diffs(n);
  for (std::size_t i = 0; i < n; ++i) {
    diffs[i] = samples[i + 1] - samples[i];
    mean += diffs[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n - 1);

  const double r = var / 2.0;
  if (r > 0.0 && std::isfinite(r)) {
    params.r = r;
    params.q = r / 100.0;
  }
  return params;
}

}  // namespace battkit::ekf

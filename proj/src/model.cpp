#include "mlsmooth/model.hpp"

#include <cmath>
#include <numbers>

namespace mlsmooth {

namespace {

void require_spd(const Matrix& a, const char* name, Eigen::Index dim) {
  if (a.rows() != dim || a.cols() != dim)
    throw ModelError(std::string(name) + ": expected " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  if (!a.allFinite()) throw ModelError(std::string(name) + ": non-finite entries");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()))
    throw ModelError(std::string(name) + ": matrix is not symmetric");
  if (!is_positive_definite(a)) throw ModelError(std::string(name) + ": matrix is not positive definite");
}

} // namespace

void StateSpaceModel::check_transition_step(int k) const {
  if (k < 1 || k > horizon())
    throw std::out_of_range("transition step " + std::to_string(k) + " outside 1.." + std::to_string(horizon()));
}

void StateSpaceModel::check_measurement_step(int k) const {
  if (k < 0 || k > horizon())
    throw std::out_of_range("measurement step " + std::to_string(k) + " outside 0.." + std::to_string(horizon()));
}

GaussianStateSpaceModel::GaussianStateSpaceModel(int horizon, Matrix H, Matrix Q, Matrix R, Vector mu, Matrix P0)
    : horizon_(horizon), H_(std::move(H)), Q_(std::move(Q)), R_(std::move(R)), mu_(std::move(mu)), P0_(std::move(P0)) {
  if (horizon_ < 1) throw ModelError("horizon must be at least 1");
  const Eigen::Index p = mu_.size();
  if (p < 1) throw ModelError("state dimension must be at least 1");
  if (!mu_.allFinite()) throw ModelError("mu: non-finite entries");
  require_spd(P0_, "P0", p);
  require_spd(Q_, "Q", p);
  require_spd(R_, "R", R_.rows());
  if (H_.rows() != R_.rows() || H_.cols() != p) throw ModelError("H: shape does not match R and state dimension");
  if (!H_.allFinite()) throw ModelError("H: non-finite entries");

  Q_chol_ = cholesky(Q_);
  R_chol_ = cholesky(R_);
  P0_chol_ = cholesky(P0_);
  Q_inv_ = spd_inverse(Q_);
  R_inv_ = spd_inverse(R_);
  P0_inv_ = spd_inverse(P0_);
  Q_whiten_ = Q_chol_.matrixL().solve(Matrix::Identity(p, p));
  Q_log_det_ = log_determinant(Q_chol_);
}

Matrix GaussianStateSpaceModel::transition_mean_batch(int k, const Matrix& prevs) const {
  Matrix out(prevs.rows(), prevs.cols());
  for (Eigen::Index m = 0; m < prevs.cols(); ++m) out.col(m) = transition_mean(k, prevs.col(m));
  return out;
}

double GaussianStateSpaceModel::initial_logpdf(const Vector& x0) const {
  return gaussian_logpdf(x0, mu_, P0_chol_);
}

double GaussianStateSpaceModel::transition_logpdf(int k, const Vector& x_next, const Vector& x_prev) const {
  check_transition_step(k);
  return gaussian_logpdf(x_next, transition_mean(k, x_prev), Q_chol_);
}

double GaussianStateSpaceModel::measurement_logpdf(int k, const Vector& y, const Vector& x) const {
  check_measurement_step(k);
  return gaussian_logpdf(y, H(k) * x, R_chol_);
}

Vector GaussianStateSpaceModel::sample_initial(Rng& rng) const {
  return mu_ + P0_chol_.matrixL() * rng.normal_vector(mu_.size());
}

Vector GaussianStateSpaceModel::sample_transition(int k, const Vector& x_prev, Rng& rng) const {
  check_transition_step(k);
  return transition_mean(k, x_prev) + Q_chol_.matrixL() * rng.normal_vector(mu_.size());
}

Vector GaussianStateSpaceModel::sample_measurement(int k, const Vector& x, Rng& rng) const {
  check_measurement_step(k);
  return H(k) * x + R_chol_.matrixL() * rng.normal_vector(R_.rows());
}

Vector GaussianStateSpaceModel::d_initial(const Vector& x0) const { return -P0_inv_ * (x0 - mu_); }

Vector GaussianStateSpaceModel::d_meas(int k, const Vector& y, const Vector& x) const {
  check_measurement_step(k);
  return H(k).transpose() * (R_inv_ * (y - H(k) * x));
}

Vector GaussianStateSpaceModel::d_trans_out(int k, const Vector& x_next, const Vector& x_prev) const {
  check_transition_step(k);
  return -Q_inv_ * (x_next - transition_mean(k, x_prev));
}

Vector GaussianStateSpaceModel::d_trans_in(int k, const Vector& x_next, const Vector& x_prev) const {
  check_transition_step(k);
  return transition_jacobian(k, x_prev).transpose() * (Q_inv_ * (x_next - transition_mean(k, x_prev)));
}

Matrix GaussianStateSpaceModel::h_meas(int k, const Vector&) const {
  check_measurement_step(k);
  return symmetrize(H(k).transpose() * R_inv_ * H(k));
}

Matrix GaussianStateSpaceModel::h_trans_out(int k) const {
  check_transition_step(k);
  return Q_inv_;
}

Matrix GaussianStateSpaceModel::h_trans_cross(int k, const Vector& x_prev) const {
  check_transition_step(k);
  return Q_inv_ * transition_jacobian(k, x_prev);
}

Matrix GaussianStateSpaceModel::h_trans_in(int k, const Vector& x_next, const Vector& x_prev) const {
  check_transition_step(k);
  const Matrix J = transition_jacobian(k, x_prev);
  const Vector weighted_residual = Q_inv_ * (x_next - transition_mean(k, x_prev));
  // Gauss-Newton term minus the curvature of the mean contracted with Q^{-1} v.
  return symmetrize(J.transpose() * Q_inv_ * J - transition_curvature(k, x_prev, weighted_residual));
}

LinearGaussianModel::LinearGaussianModel(int horizon, LinearGaussianParams params)
    : GaussianStateSpaceModel(horizon, params.H, params.Q, params.R, params.mu, params.P0), params_(std::move(params)) {
  const Eigen::Index p = params_.mu.size();
  if (params_.F.rows() != p || params_.F.cols() != p) throw ModelError("F: expected square matrix matching state dimension");
  if (!params_.F.allFinite()) throw ModelError("F: non-finite entries");
  if (params_.G.size() == 0) params_.G = Matrix::Zero(p, 0);
  if (params_.G.rows() != p) throw ModelError("G: row count must match state dimension");
  if (!params_.u.empty()) {
    if (static_cast<int>(params_.u.size()) != horizon + 1) throw ModelError("u: expected one control vector per step 0..n");
    for (const auto& u : params_.u)
      if (u.size() != params_.G.cols()) throw ModelError("u: dimension does not match G");
  }
}

Vector LinearGaussianModel::control_offset(int k) const {
  if (params_.u.empty() || params_.G.cols() == 0) return Vector::Zero(state_dim());
  return params_.G * params_.u.at(static_cast<std::size_t>(k));
}

Vector LinearGaussianModel::transition_mean(int k, const Vector& x_prev) const {
  return F(k) * x_prev + control_offset(k);
}

Matrix LinearGaussianModel::transition_jacobian(int k, const Vector&) const { return F(k); }

Matrix LinearGaussianModel::transition_curvature(int, const Vector&, const Vector&) const {
  return Matrix::Zero(state_dim(), state_dim());
}

Matrix LinearGaussianModel::transition_mean_batch(int k, const Matrix& prevs) const {
  Matrix out = F(k) * prevs;
  out.colwise() += control_offset(k);
  return out;
}

NonlinearTanhModel::NonlinearTanhModel(int horizon, double q, double r, double p0)
    : GaussianStateSpaceModel(horizon, Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, q),
                              Matrix::Constant(1, 1, r), Vector::Zero(1), Matrix::Constant(1, 1, p0)) {}

double NonlinearTanhModel::gain(int k) {
  return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / 20.0);
}

Vector NonlinearTanhModel::transition_mean(int k, const Vector& x_prev) const {
  return Vector::Constant(1, gain(k) * std::tanh(std::numbers::pi * x_prev[0]));
}

Matrix NonlinearTanhModel::transition_jacobian(int k, const Vector& x_prev) const {
  const double c = std::cosh(std::numbers::pi * x_prev[0]);
  return Matrix::Constant(1, 1, gain(k) * std::numbers::pi / (c * c));
}

Matrix NonlinearTanhModel::transition_curvature(int k, const Vector& x_prev, const Vector& c) const {
  const double z = std::numbers::pi * x_prev[0];
  const double sech = 1.0 / std::cosh(z);
  const double second = -2.0 * gain(k) * std::numbers::pi * std::numbers::pi * sech * sech * std::tanh(z);
  return Matrix::Constant(1, 1, c[0] * second);
}

Matrix NonlinearTanhModel::transition_mean_batch(int k, const Matrix& prevs) const {
  return gain(k) * (std::numbers::pi * prevs.array()).tanh().matrix();
}

LinearGaussianModel three_state_linear_model(int horizon) {
  LinearGaussianParams p;
  p.F.resize(3, 3);
  p.F << 0.66, -1.31, -1.11,
         0.07, 0.73, -0.06,
         0.00, 0.08, 0.80;
  p.H.resize(1, 3);
  p.H << 0.0, 1.0, 1.0;
  p.Q = Eigen::Vector3d(0.2, 0.3, 0.5).asDiagonal();
  p.R = Matrix::Constant(1, 1, 0.1);
  p.mu = Vector::Zero(3);
  p.P0 = 0.3 * Matrix::Identity(3, 3);
  return LinearGaussianModel(horizon, std::move(p));
}

LinearGaussianModel scalar_linear_model(int horizon, double F, double H, double Q, double R, double mu, double P0) {
  LinearGaussianParams p;
  p.F = Matrix::Constant(1, 1, F);
  p.H = Matrix::Constant(1, 1, H);
  p.Q = Matrix::Constant(1, 1, Q);
  p.R = Matrix::Constant(1, 1, R);
  p.mu = Vector::Constant(1, mu);
  p.P0 = Matrix::Constant(1, 1, P0);
  return LinearGaussianModel(horizon, std::move(p));
}

Trajectory simulate(const StateSpaceModel& model, std::uint64_t seed) {
  Trajectory t;
  t.seed = seed;
  const int n = model.horizon();
  t.states.reserve(static_cast<std::size_t>(n) + 1);
  t.observations.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    Rng state_rng(seed, Stream::simulate, static_cast<std::uint64_t>(k), 0);
    Rng obs_rng(seed, Stream::simulate, static_cast<std::uint64_t>(k), 1);
    t.states.push_back(k == 0 ? model.sample_initial(state_rng)
                              : model.sample_transition(k, t.states.back(), state_rng));
    t.observations.push_back(model.sample_measurement(k, t.states.back(), obs_rng));
  }
  return t;
}

} // namespace mlsmooth

// State-space model interface and the two concrete systems shipped with the
// library: a linear-Gaussian system and a scalar tanh system.
//
// Time steps run k = 0..n. A measurement exists at every step; the transition
// density f(x_k | x_{k-1}) exists for k = 1..n and the prior f(x_0) closes
// the chain at k = 0.

#ifndef MLSMOOTH_MODEL_HPP
#define MLSMOOTH_MODEL_HPP

#include "mlsmooth/numerics.hpp"
#include "mlsmooth/rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlsmooth {

class ModelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Densities, samplers and state derivatives of a Markov state-space model.
///
/// Derivative naming: `d_*` are gradients of log-densities, `h_*` are negative
/// Hessians. For the transition density f(x' | x) at step k:
///   d_trans_out = d/dx' log f,   d_trans_in = d/dx log f,
///   h_trans_out = -d2/dx'dx'^T,  h_trans_in = -d2/dxdx^T,
///   h_trans_cross = +d2/dx'dx^T (the x_{k+1}, x_k information block as it
///   enters the covariance recursion; see info_cross).
class StateSpaceModel {
public:
  virtual ~StateSpaceModel() = default;

  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  /// Last time index n.
  virtual int horizon() const = 0;
  virtual std::string kind() const = 0;

  virtual double initial_logpdf(const Vector& x0) const = 0;
  virtual double transition_logpdf(int k, const Vector& x_next, const Vector& x_prev) const = 0;
  virtual double measurement_logpdf(int k, const Vector& y, const Vector& x) const = 0;

  virtual Vector sample_initial(Rng& rng) const = 0;
  virtual Vector sample_transition(int k, const Vector& x_prev, Rng& rng) const = 0;
  virtual Vector sample_measurement(int k, const Vector& x, Rng& rng) const = 0;

  virtual Vector d_initial(const Vector& x0) const = 0;
  virtual Vector d_meas(int k, const Vector& y, const Vector& x) const = 0;
  virtual Vector d_trans_out(int k, const Vector& x_next, const Vector& x_prev) const = 0;
  virtual Vector d_trans_in(int k, const Vector& x_next, const Vector& x_prev) const = 0;

  virtual Matrix h_initial() const = 0;
  virtual Matrix h_meas(int k, const Vector& x) const = 0;
  virtual Matrix h_trans_out(int k) const = 0;
  virtual Matrix h_trans_cross(int k, const Vector& x_prev) const = 0;
  virtual Matrix h_trans_in(int k, const Vector& x_next, const Vector& x_prev) const = 0;

protected:
  void check_transition_step(int k) const;
  void check_measurement_step(int k) const;
};

/// Additive-Gaussian transition x_k = m_k(x_{k-1}) + v_k, v_k ~ N(0, Q),
/// linear measurement y_k = H x_k + w_k, w_k ~ N(0, R), prior N(mu, P0).
/// Subclasses provide the transition mean and its first two derivatives.
class GaussianStateSpaceModel : public StateSpaceModel {
public:
  GaussianStateSpaceModel(int horizon, Matrix H, Matrix Q, Matrix R, Vector mu, Matrix P0);

  int state_dim() const override { return static_cast<int>(mu_.size()); }
  int obs_dim() const override { return static_cast<int>(R_.rows()); }
  int horizon() const override { return horizon_; }

  virtual Vector transition_mean(int k, const Vector& x_prev) const = 0;
  /// d m_k / d x^T at x_prev (p x p).
  virtual Matrix transition_jacobian(int k, const Vector& x_prev) const = 0;
  /// sum_i c_i * Hessian(m_k,i)(x_prev); zero for affine transitions.
  virtual Matrix transition_curvature(int k, const Vector& x_prev, const Vector& c) const = 0;
  /// Transition means for every column of `prevs`.
  virtual Matrix transition_mean_batch(int k, const Matrix& prevs) const;

  // Constant-in-k storage behind indexed accessors.
  virtual const Matrix& H(int) const { return H_; }
  virtual const Matrix& Q(int) const { return Q_; }
  virtual const Matrix& R(int) const { return R_; }
  const Vector& mu() const { return mu_; }
  const Matrix& P0() const { return P0_; }

  const Matrix& Q_inverse(int) const { return Q_inv_; }
  /// L^{-1} where Q = L L^T.
  const Matrix& Q_whitener(int) const { return Q_whiten_; }
  double Q_log_det(int) const { return Q_log_det_; }

  double initial_logpdf(const Vector& x0) const override;
  double transition_logpdf(int k, const Vector& x_next, const Vector& x_prev) const override;
  double measurement_logpdf(int k, const Vector& y, const Vector& x) const override;

  Vector sample_initial(Rng& rng) const override;
  Vector sample_transition(int k, const Vector& x_prev, Rng& rng) const override;
  Vector sample_measurement(int k, const Vector& x, Rng& rng) const override;

  Vector d_initial(const Vector& x0) const override;
  Vector d_meas(int k, const Vector& y, const Vector& x) const override;
  Vector d_trans_out(int k, const Vector& x_next, const Vector& x_prev) const override;
  Vector d_trans_in(int k, const Vector& x_next, const Vector& x_prev) const override;

  Matrix h_initial() const override { return P0_inv_; }
  Matrix h_meas(int k, const Vector& x) const override;
  Matrix h_trans_out(int k) const override;
  Matrix h_trans_cross(int k, const Vector& x_prev) const override;
  Matrix h_trans_in(int k, const Vector& x_next, const Vector& x_prev) const override;

private:
  int horizon_;
  Matrix H_, Q_, R_;
  Vector mu_;
  Matrix P0_;
  Eigen::LLT<Matrix> Q_chol_, R_chol_, P0_chol_;
  Matrix Q_inv_, Q_whiten_, R_inv_, P0_inv_;
  double Q_log_det_ = 0.0;
};

struct LinearGaussianParams {
  Matrix F, G, H, Q, R;
  Vector mu;
  Matrix P0;
  /// Control inputs u_1..u_n indexed by step; empty means no control.
  std::vector<Vector> u;
};

/// x_k = F x_{k-1} + G u_k + v_k,  y_k = H x_k + w_k.
class LinearGaussianModel final : public GaussianStateSpaceModel {
public:
  LinearGaussianModel(int horizon, LinearGaussianParams params);

  std::string kind() const override { return "linear"; }

  const Matrix& F(int) const { return params_.F; }
  const Matrix& G(int) const { return params_.G; }
  /// G_k u_k, zero without control.
  Vector control_offset(int k) const;
  const LinearGaussianParams& params() const { return params_; }

  Vector transition_mean(int k, const Vector& x_prev) const override;
  Matrix transition_jacobian(int k, const Vector& x_prev) const override;
  Matrix transition_curvature(int k, const Vector& x_prev, const Vector& c) const override;
  Matrix transition_mean_batch(int k, const Matrix& prevs) const override;

private:
  LinearGaussianParams params_;
};

/// x_k = f_k tanh(pi x_{k-1}) + v_k, f_k = 1 + 0.5 sin(2 pi k / 20),
/// y_k = x_k / 2 + w_k, v_k ~ N(0, 0.2), w_k ~ N(0, 1), x_0 ~ N(0, 1).
class NonlinearTanhModel final : public GaussianStateSpaceModel {
public:
  explicit NonlinearTanhModel(int horizon, double q = 0.2, double r = 1.0, double p0 = 1.0);

  std::string kind() const override { return "tanh"; }

  static double gain(int k);

  Vector transition_mean(int k, const Vector& x_prev) const override;
  Matrix transition_jacobian(int k, const Vector& x_prev) const override;
  Matrix transition_curvature(int k, const Vector& x_prev, const Vector& c) const override;
  Matrix transition_mean_batch(int k, const Matrix& prevs) const override;
};

/// Three-state system with a two-state measurement sum, horizon n.
LinearGaussianModel three_state_linear_model(int horizon);

/// Scalar random-walk style model; defaults give F=H=Q=R=P0=1, mu=0.
LinearGaussianModel scalar_linear_model(int horizon, double F = 1.0, double H = 1.0, double Q = 1.0,
                                        double R = 1.0, double mu = 0.0, double P0 = 1.0);

struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> observations;
  std::uint64_t seed = 0;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

/// Ancestral sampling x_0 -> x_1 -> ... with a measurement at each step.
Trajectory simulate(const StateSpaceModel& model, std::uint64_t seed);

} // namespace mlsmooth

#endif // MLSMOOTH_MODEL_HPP

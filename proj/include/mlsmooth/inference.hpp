// Incomplete-data score and observed information of xi = (x_k, x_{k+1}, y_{0:n})
// with respect to x_k, in particle form and in exact linear form.
//
// Step conventions: for 1 <= k <= n-1 all three transition terms are present.
// At k = 0 the backward expectation is replaced by the prior score. At k = n
// (no next state) the forward transition term is dropped; this form is only
// used when the terminal estimate is computed by maximization.

#ifndef MLSMOOTH_INFERENCE_HPP
#define MLSMOOTH_INFERENCE_HPP

#include "mlsmooth/kalman.hpp"
#include "mlsmooth/particle.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <utility>

namespace mlsmooth {

struct ScoreEval {
  int step = 0;
  Vector score;
  Matrix info_z;
  Matrix info_xi;
  Matrix m_z;
  Matrix cross_k_next;  // J^xi_{x_k,x_{k+1}}; empty without a next state
  Matrix cross_next_k;  // J^xi_{x_{k+1},x_k}
  double objective = std::numeric_limits<double>::quiet_NaN();  // loglik up to a constant in x
  bool has_next() const { return cross_k_next.size() > 0; }
};

/// Evaluates the score and information at one fixed step k.
class StepEvaluator {
public:
  virtual ~StepEvaluator() = default;
  /// x_next may be null only at k = n.
  virtual ScoreEval evaluate(const Vector& x, const Vector* x_next) const = 0;
  /// Objective whose gradient is the score, up to a constant in x.
  virtual std::optional<double> loglik(const Vector& x, const Vector* x_next) const {
    (void)x;
    (void)x_next;
    return std::nullopt;
  }
};

/// Source of per-step evaluators plus the forward quantities the smoother
/// needs for initialization and the terminal boundary.
class ScoreBackend {
public:
  virtual ~ScoreBackend() = default;
  virtual int horizon() const = 0;
  virtual int state_dim() const = 0;
  /// Filtered mean x_{k|k}.
  virtual Vector filtered_mean(int k) const = 0;
  /// Filtering covariance at n, the boundary of the covariance recursion.
  virtual Matrix terminal_covariance() const = 0;
  virtual std::unique_ptr<StepEvaluator> at_step(int k) const = 0;
};

/// Particle backend. The model, observations and history must outlive it.
class SmcBackend final : public ScoreBackend {
public:
  SmcBackend(const StateSpaceModel& model, const std::vector<Vector>& y, const ParticleHistory& ph,
             Exec exec = Exec::serial);
  int horizon() const override { return ph_->horizon(); }
  int state_dim() const override { return model_->state_dim(); }
  Vector filtered_mean(int k) const override;
  Matrix terminal_covariance() const override;
  std::unique_ptr<StepEvaluator> at_step(int k) const override;

private:
  const StateSpaceModel* model_;
  const std::vector<Vector>* y_;
  const ParticleHistory* ph_;
  Exec exec_;
};

/// Exact linear-Gaussian backend driven by a Kalman filter pass.
class KalmanBackend final : public ScoreBackend {
public:
  KalmanBackend(const LinearGaussianModel& model, const FilterResult& fr);
  int horizon() const override { return fr_->horizon(); }
  int state_dim() const override { return model_->state_dim(); }
  Vector filtered_mean(int k) const override { return fr_->at(k).x_filt; }
  Matrix terminal_covariance() const override { return fr_->at(horizon()).P_filt; }
  std::unique_ptr<StepEvaluator> at_step(int k) const override;

private:
  const LinearGaussianModel* model_;
  const FilterResult* fr_;
};

/// d_meas(k) + d_trans_in(k+1) + d_trans_out(k), 1 <= k <= n-1.
Vector complete_score(const StateSpaceModel& model, int k, const Vector& x_prev, const Vector& x_k,
                      const Vector& x_next, const Vector& y_k);

// Particle valuations. An empty x_next (size 0) selects the no-next-state form.
Vector smc_score(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next, const Vector& y_k,
                 const ParticleHistory& ph);
Matrix smc_info_z(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next,
                  const ParticleHistory& ph);
Matrix smc_info_xi(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next,
                   const ParticleHistory& ph);
/// Direct weighted sum of outer products of complete-data scores.
Matrix m_z_matrix(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next, const Vector& y_k,
                  const ParticleHistory& ph);

/// log sum_m alpha_{k-1}^m f(x_k | x_{k-1}^m) + log f(y_k | x_k) + log f(x_{k+1} | x_k):
/// the particle approximation of the incomplete-data loglikelihood whose
/// gradient is smc_score. Prior term replaces the mixture at k = 0.
double smc_loglik(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next, const Vector& y_k,
                  const ParticleHistory& ph);

/// {J^xi_{x_k,x_{k+1}}, J^xi_{x_{k+1},x_k}} from h_trans_cross(k+1, x_k), 0 <= k <= n-1.
std::pair<Matrix, Matrix> info_cross(const StateSpaceModel& model, int k, const Vector& x_k);

} // namespace mlsmooth

#endif // MLSMOOTH_INFERENCE_HPP

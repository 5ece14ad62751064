// Exact linear-Gaussian inference: Kalman filter, RTS smoother and the
// closed-form incomplete-data score, loglikelihood and information blocks of
// the pair (x_k, x_{k+1}).

#ifndef MLSMOOTH_KALMAN_HPP
#define MLSMOOTH_KALMAN_HPP

#include "mlsmooth/model.hpp"

#include <vector>

namespace mlsmooth {

struct FilterStep {
  Vector x_pred;  // x_{k|k-1}; mu at k = 0
  Matrix P_pred;  // P_{k|k-1}; P0 at k = 0
  Vector x_filt;  // x_{k|k}
  Matrix P_filt;  // P_{k|k}
  Matrix gain;    // K_k
  Matrix cross;   // Sigma_{k|k-1} = P_{k-1|k-2}(F_k - F_k K_{k-1} H_{k-1})^T; empty at k = 0
};

struct FilterResult {
  std::vector<FilterStep> steps;
  int horizon() const { return static_cast<int>(steps.size()) - 1; }
  const FilterStep& at(int k) const { return steps.at(static_cast<std::size_t>(k)); }
};

/// Predict/update recursion with Joseph-form covariance update. y must hold
/// n+1 observations. Throws NumericError (with step) on a non-PD innovation
/// covariance.
FilterResult kalman_filter(const LinearGaussianModel& model, const std::vector<Vector>& y);

struct RtsResult {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  std::vector<Matrix> gains;  // C_k for k < n; empty at n
};

/// Backward RTS pass. decouple forces C_k = 0, which makes the output equal
/// the filtered quantities (used to test the output plumbing).
RtsResult rts_smooth(const LinearGaussianModel& model, const FilterResult& fr, bool decouple = false);

/// Score of log N(x_k | x_{k|k}, P_{k|k}) + log f(x_{k+1} | x_k) in x_k, 0 <= k <= n-1.
/// At k = n only the filtering term remains and x_next is ignored.
Vector incomplete_score_linear(const LinearGaussianModel& model, const FilterResult& fr, int k, const Vector& x_k,
                               const Vector& x_next);

/// The corresponding log-density, up to a constant in x_k.
double incomplete_loglik_linear(const LinearGaussianModel& model, const FilterResult& fr, int k, const Vector& x_k,
                                const Vector& x_next);

struct InfoBlocks {
  Matrix xx;       // J_{x_k, x_k}
  Matrix x_next;   // J_{x_k, x_{k+1}}
  Matrix next_x;   // J_{x_{k+1}, x_k}
};

/// J^xi_{x_k,x_k} = P_{k|k}^{-1} + F^T Q^{-1} F, J_{x_k,x_{k+1}} = F^T Q^{-1},
/// J_{x_{k+1},x_k} = Q^{-1} F (F, Q taken at step k+1), 0 <= k <= n-1.
InfoBlocks info_blocks_linear(const LinearGaussianModel& model, const FilterResult& fr, int k);

/// E[x_{k-1} | x_k, y_{0:k-1}] = x_{k-1|k-1} + Sigma_{k|k-1} P_{k|k-1}^{-1} (x_k - x_{k|k-1}), 1 <= k <= n.
Vector conditional_mean_previous(const FilterResult& fr, int k, const Vector& x_k);

/// Backward information form of log f(y_{k:n} | x_k) = -x^T Omega_k x / 2 + x^T nu_k + const.
struct BackwardInformation {
  std::vector<Matrix> omega;
  std::vector<Vector> nu;
};

BackwardInformation backward_information(const LinearGaussianModel& model, const std::vector<Vector>& y);

/// Gradient in x_{k+1} of log f(x_k, x_{k+1} | y_{0:n}), the second block of
/// the joint incomplete-data score of (x_k, x_{k+1}).
Vector incomplete_score_next_linear(const LinearGaussianModel& model, const FilterResult& fr,
                                    const BackwardInformation& bi, int k, const Vector& x_k, const Vector& x_next);

} // namespace mlsmooth

#endif // MLSMOOTH_KALMAN_HPP

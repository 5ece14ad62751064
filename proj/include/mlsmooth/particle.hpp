// Bootstrap particle filter and the backward-kernel weights
// w_{k-1}^m(x_k) proportional to alpha_{k-1}^m f(x_k | x_{k-1}^m).

#ifndef MLSMOOTH_PARTICLE_HPP
#define MLSMOOTH_PARTICLE_HPP

#include "mlsmooth/kernels.hpp"
#include "mlsmooth/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mlsmooth {

/// All weights at a step vanished numerically.
class DegenerateWeightsError : public NumericError {
public:
  using NumericError::NumericError;
};

struct ParticleHistory {
  int particle_count = 0;
  std::uint64_t seed = 0;
  std::vector<Matrix> particles;           // p x M per step, recorded before resampling
  std::vector<Vector> weights;             // alpha_k, sums to one
  std::vector<Vector> log_weights;         // log alpha_k, computed without underflow
  std::vector<std::vector<int>> ancestors; // parent of each step-(k+1) particle; identity if not resampled
  std::vector<double> ess;
  std::vector<char> resampled;

  int horizon() const { return static_cast<int>(particles.size()) - 1; }
  const Matrix& atoms(int k) const { return particles.at(static_cast<std::size_t>(k)); }
  const Vector& alpha(int k) const { return weights.at(static_cast<std::size_t>(k)); }
};

/// exp(l_m - max) / sum_j exp(l_j - max). All entries -inf throws
/// DegenerateWeightsError carrying `step`.
Vector normalized_weights(std::span<const double> loglik, std::optional<int> step = std::nullopt);

/// log of normalized_weights, exact for weights that would underflow.
Vector normalized_log_weights(std::span<const double> loglik, std::optional<int> step = std::nullopt);

/// 1 / sum w^2.
double effective_sample_size(const Vector& weights);

/// M ancestor indices drawn from the categorical distribution `weights`.
std::vector<int> multinomial_resample(const Vector& weights, Rng& rng);

/// Bootstrap filter with multinomial resampling whenever ESS < M/2. The result
/// is a pure function of (model, y, M, seed) for either execution mode.
ParticleHistory pf_run(const StateSpaceModel& model, const std::vector<Vector>& y, int particle_count,
                       std::uint64_t seed, Exec exec = Exec::parallel);

Vector filtered_mean(const ParticleHistory& ph, int k);
Matrix filtered_covariance(const ParticleHistory& ph, int k);

/// Backward-kernel evaluator for one step k in 1..n. Built once per step and
/// reused across smoother iterations; Gaussian models get the transition means
/// of the step-(k-1) atoms precomputed.
class BackwardKernel {
public:
  BackwardKernel(const StateSpaceModel& model, const ParticleHistory& ph, int k, Exec exec = Exec::serial);

  int step() const { return k_; }
  const Matrix& atoms() const { return *atoms_; }

  /// Weights w^m(x) over the step-(k-1) atoms and, when grads is non-null,
  /// g_m = d/dx log f(x | x_{k-1}^m) as columns. log_mixture receives
  /// log sum_m alpha^m f(x | x^m) up to a constant in x.
  void evaluate(const Vector& x, Vector& weights, Matrix* grads = nullptr, double* log_mixture = nullptr) const;

private:
  const StateSpaceModel* model_;
  const GaussianStateSpaceModel* gaussian_;
  int k_;
  const Matrix* atoms_;
  const Vector* log_alpha_;
  Matrix means_;
  Exec exec_;
};

/// w_{k-1}^m(x_k), 1 <= k <= n.
Vector backward_kernel_weights(int k, const Vector& x_k, const ParticleHistory& ph, const StateSpaceModel& model);

} // namespace mlsmooth

#endif // MLSMOOTH_PARTICLE_HPP

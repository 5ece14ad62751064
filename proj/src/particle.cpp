#include "mlsmooth/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mlsmooth {

namespace {

constexpr double kDegenerateLoglik = -700.0;

double max_finite(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v)
    if (!std::isnan(x)) m = std::max(m, x);
  return m;
}

} // namespace

Vector normalized_log_weights(std::span<const double> loglik, std::optional<int> step) {
  if (loglik.empty()) throw std::invalid_argument("normalized_weights: empty input");
  const double top = max_finite(loglik);
  if (!std::isfinite(top)) throw DegenerateWeightsError("all particle weights vanish", step);
  double total = 0.0;
  for (double l : loglik) total += std::isnan(l) ? 0.0 : std::exp(l - top);
  const double log_total = std::log(total);
  Vector out(static_cast<Eigen::Index>(loglik.size()));
  for (std::size_t i = 0; i < loglik.size(); ++i) {
    const double l = std::isnan(loglik[i]) ? -std::numeric_limits<double>::infinity() : loglik[i];
    out[static_cast<Eigen::Index>(i)] = (l - top) - log_total;
  }
  return out;
}

Vector normalized_weights(std::span<const double> loglik, std::optional<int> step) {
  return normalized_log_weights(loglik, step).array().exp().matrix();
}

double effective_sample_size(const Vector& weights) { return 1.0 / weights.squaredNorm(); }

std::vector<int> multinomial_resample(const Vector& weights, Rng& rng) {
  const Eigen::Index count = weights.size();
  std::vector<double> cdf(static_cast<std::size_t>(count));
  std::partial_sum(weights.data(), weights.data() + count, cdf.begin());
  std::vector<int> out(static_cast<std::size_t>(count));
  const double total = cdf.back();
  for (auto& a : out) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    a = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), count - 1));
  }
  return out;
}

ParticleHistory pf_run(const StateSpaceModel& model, const std::vector<Vector>& y, int particle_count,
                       std::uint64_t seed, Exec exec) {
  if (particle_count < 2) throw std::invalid_argument("pf_run: at least two particles required");
  const int n = model.horizon();
  if (static_cast<int>(y.size()) != n + 1) throw std::invalid_argument("pf_run: expected n+1 observations");
  const auto steps = static_cast<std::size_t>(n) + 1;
  const auto M = static_cast<Eigen::Index>(particle_count);

  ParticleHistory ph;
  ph.particle_count = particle_count;
  ph.seed = seed;
  ph.particles.reserve(steps);
  ph.weights.reserve(steps);
  ph.log_weights.reserve(steps);
  ph.ancestors.reserve(steps);
  ph.ess.reserve(steps);
  ph.resampled.reserve(steps);

  std::vector<int> identity(static_cast<std::size_t>(particle_count));
  std::iota(identity.begin(), identity.end(), 0);

  for (int k = 0; k <= n; ++k) {
    Vector log_prior;
    if (k == 0) {
      ph.particles.push_back(kernels::sample_initial(model, particle_count, seed, exec));
      log_prior = Vector::Constant(M, -std::log(static_cast<double>(M)));
    } else {
      const auto prev = static_cast<std::size_t>(k) - 1;
      ph.particles.push_back(kernels::propagate(model, k, ph.particles[prev], ph.ancestors[prev], seed, exec));
      log_prior = ph.resampled[prev] ? Vector::Constant(M, -std::log(static_cast<double>(M))) : ph.log_weights[prev];
    }
    const Vector loglik = kernels::measurement_loglik(model, k, y[static_cast<std::size_t>(k)], ph.particles.back(), exec);
    if (max_finite({loglik.data(), static_cast<std::size_t>(M)}) < kDegenerateLoglik) {
      std::ostringstream msg;
      msg << "measurement log-likelihood below " << kDegenerateLoglik << " for every particle";
      throw DegenerateWeightsError(msg.str(), k);
    }
    const Vector total = log_prior + loglik;
    ph.log_weights.push_back(normalized_log_weights({total.data(), static_cast<std::size_t>(M)}, k));
    ph.weights.push_back(ph.log_weights.back().array().exp().matrix());
    const double ess = effective_sample_size(ph.weights.back());
    ph.ess.push_back(ess);
    const bool resample = ess < 0.5 * static_cast<double>(M);
    ph.resampled.push_back(resample ? 1 : 0);
    if (resample) {
      Rng rng(seed, Stream::resample, static_cast<std::uint64_t>(k), 0);
      ph.ancestors.push_back(multinomial_resample(ph.weights.back(), rng));
    } else {
      ph.ancestors.push_back(identity);
    }
  }
  return ph;
}

Vector filtered_mean(const ParticleHistory& ph, int k) { return kernels::weighted_mean(ph.alpha(k), ph.atoms(k)); }

Matrix filtered_covariance(const ParticleHistory& ph, int k) {
  const Vector mean = filtered_mean(ph, k);
  return kernels::weighted_covariance(ph.alpha(k), ph.atoms(k), mean);
}

BackwardKernel::BackwardKernel(const StateSpaceModel& model, const ParticleHistory& ph, int k, Exec exec)
    : model_(&model), gaussian_(dynamic_cast<const GaussianStateSpaceModel*>(&model)), k_(k), exec_(exec) {
  if (k < 1 || k > ph.horizon())
    throw std::out_of_range("backward kernel step " + std::to_string(k) + " outside 1.." + std::to_string(ph.horizon()));
  atoms_ = &ph.atoms(k - 1);
  log_alpha_ = &ph.log_weights.at(static_cast<std::size_t>(k) - 1);
  if (gaussian_) means_ = gaussian_->transition_mean_batch(k, *atoms_);
}

void BackwardKernel::evaluate(const Vector& x, Vector& weights, Matrix* grads, double* log_mixture) const {
  Vector log_terms;
  if (gaussian_)
    kernels::gaussian_transition_terms(means_, gaussian_->Q_whitener(k_), x, log_terms, grads, exec_);
  else
    kernels::generic_transition_terms(*model_, k_, x, *atoms_, log_terms, grads, exec_);
  log_terms += *log_alpha_;
  const double top = max_finite({log_terms.data(), static_cast<std::size_t>(log_terms.size())});
  if (!std::isfinite(top)) {
    std::ostringstream msg;
    msg << "backward kernel degenerate at x = " << x.transpose();
    throw DegenerateWeightsError(msg.str(), k_);
  }
  weights = (log_terms.array() - top).exp().matrix();
  const double total = weights.sum();
  weights /= total;
  if (log_mixture) *log_mixture = top + std::log(total);
}

Vector backward_kernel_weights(int k, const Vector& x_k, const ParticleHistory& ph, const StateSpaceModel& model) {
  BackwardKernel kernel(model, ph, k);
  Vector w;
  kernel.evaluate(x_k, w);
  return w;
}

} // namespace mlsmooth

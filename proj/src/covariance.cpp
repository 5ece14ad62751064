#include "mlsmooth/covariance.hpp"

#include <algorithm>
#include <string>

namespace mlsmooth {

std::vector<Matrix> covariance_recursion(const std::vector<InfoBlocks>& blocks, const Matrix& terminal) {
  const auto n = blocks.size();
  std::vector<Matrix> out(n + 1);
  out[n] = symmetrize(terminal);
  for (std::size_t i = n; i-- > 0;) {
    const InfoBlocks& b = blocks[i];
    const int k = static_cast<int>(i);
    const Matrix inv = spd_inverse(b.xx, k);
    out[i] = symmetrize(inv * b.x_next * out[i + 1] * b.next_x * inv + inv);
  }
  return out;
}

TerminalCovariance terminal_covariance(const ParticleHistory& ph) {
  const int n = ph.horizon();
  TerminalCovariance t;
  t.cov = filtered_covariance(ph, n);
  t.degenerate = ph.alpha(n).maxCoeff() >= 1.0 - 1e-12 || t.cov.cwiseAbs().maxCoeff() == 0.0;
  if (t.degenerate) t.cov.setZero();
  return t;
}

Matrix terminal_covariance(const FilterResult& fr) { return fr.at(fr.horizon()).P_filt; }

std::vector<Vector> CovEstimate::standard_errors() const {
  std::vector<Vector> out;
  out.reserve(covs.size());
  for (const auto& c : covs) out.push_back(c.diagonal().cwiseMax(0.0).cwiseSqrt());
  return out;
}

namespace {

struct Replicate {
  bool failed = false;
  SmootherResult smooth;
  Matrix terminal;
};

Replicate run_replicate(const StateSpaceModel& model, const std::vector<Vector>& y, const RepeatedSamplingOptions& opt,
                        int r) {
  Replicate rep;
  try {
    const std::uint64_t seed = opt.reuse_seed ? opt.seed : derive_seed(opt.seed, static_cast<std::uint64_t>(r));
    const ParticleHistory ph = pf_run(model, y, opt.particles, seed, Exec::serial);
    rep.smooth = smooth_backward(model, y, ph, opt.iter, Exec::serial);
    rep.terminal = terminal_covariance(ph).cov;
  } catch (const std::exception&) {
    rep.failed = true;
  }
  return rep;
}

} // namespace

CovEstimate repeated_sampling(const StateSpaceModel& model, const std::vector<Vector>& y,
                              const RepeatedSamplingOptions& opt) {
  if (opt.replicates < 2) throw std::invalid_argument("repeated_sampling: at least two replicates required");
  if (opt.particles < 2) throw std::invalid_argument("repeated_sampling: at least two particles required");
  opt.iter.validate();
  const int N = opt.replicates;
  const int n = model.horizon();
  const Eigen::Index p = model.state_dim();

  std::vector<Replicate> reps(static_cast<std::size_t>(N));
  if (opt.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < N; ++r) reps[static_cast<std::size_t>(r)] = run_replicate(model, y, opt, r);
  } else {
    for (int r = 0; r < N; ++r) reps[static_cast<std::size_t>(r)] = run_replicate(model, y, opt, r);
  }

  CovEstimate est;
  est.replicates = N;
  est.means.assign(static_cast<std::size_t>(n) + 1, Vector::Zero(p));
  est.blocks.assign(static_cast<std::size_t>(n),
                    InfoBlocks{Matrix::Zero(p, p), Matrix::Zero(p, p), Matrix::Zero(p, p)});
  est.effective.assign(static_cast<std::size_t>(n) + 1, 0);
  est.repaired.assign(static_cast<std::size_t>(n), 0);
  est.terminal = Matrix::Zero(p, p);
  for (const auto& rep : reps) {
    est.replicate_failed.push_back(rep.failed ? 1 : 0);
    est.replicate_means.push_back(rep.failed ? std::vector<Vector>{} : rep.smooth.means);
  }

  // Fixed-order averaging over replicates.
  for (const auto& rep : reps) {
    if (rep.failed) continue;
    est.means[static_cast<std::size_t>(n)] += rep.smooth.means[static_cast<std::size_t>(n)];
    est.terminal += rep.terminal;
    ++est.effective[static_cast<std::size_t>(n)];
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      if (!rep.smooth.diagnostics[i].converged) continue;
      const ScoreEval& e = rep.smooth.evals[i];
      est.means[i] += rep.smooth.means[i];
      est.blocks[i].xx += e.info_xi;
      est.blocks[i].x_next += e.cross_k_next;
      ++est.effective[i];
    }
  }
  for (int k = 0; k <= n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const int count = est.effective[i];
    if (2 * count < N)
      throw NumericError("repeated_sampling: only " + std::to_string(count) + " of " + std::to_string(N) +
                             " replicates contributed",
                         k);
    est.means[i] /= count;
    if (k == n) continue;
    InfoBlocks& b = est.blocks[i];
    b.xx = symmetrize(b.xx / count);
    b.x_next /= count;
    b.next_x = b.x_next.transpose();
    const double floor = 1e-12 * trace_scale(b.xx);
    if (min_eigenvalue(b.xx) < floor) {
      b.xx = floor_eigenvalues(b.xx, floor);
      est.repaired[i] = 1;
    }
  }
  est.terminal = symmetrize(est.terminal / est.effective[static_cast<std::size_t>(n)]);
  est.covs = covariance_recursion(est.blocks, est.terminal);
  return est;
}

} // namespace mlsmooth

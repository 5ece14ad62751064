#include "mlsmooth/study.hpp"

#include "mlsmooth/kalman.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace mlsmooth {

namespace {

class Stopwatch {
public:
  explicit Stopwatch(RunReport& report) : report_(report), start_(Clock::now()) {}
  void lap(const std::string& name) {
    const auto now = Clock::now();
    report_.timings.emplace_back(name, std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

private:
  using Clock = std::chrono::steady_clock;
  RunReport& report_;
  Clock::time_point start_;
};

Vector nan_vector(Eigen::Index p) { return Vector::Constant(p, std::numeric_limits<double>::quiet_NaN()); }

RunReport run_pipeline(const ExperimentConfig& cfg, const StateSpaceModel& model, const LinearGaussianModel* linear) {
  cfg.validate();
  RunReport report;
  report.kind = model.kind();
  report.seed = cfg.seed;
  report.particles = cfg.particles;
  report.replicates = cfg.replicates;
  Stopwatch clock(report);

  const int n = model.horizon();
  const Eigen::Index p = model.state_dim();
  const Trajectory traj = simulate(model, derive_seed(cfg.seed, 0));
  const auto& y = traj.observations;
  clock.lap("simulate");

  FilterResult fr;
  RtsResult rts;
  if (linear) {
    fr = kalman_filter(*linear, y);
    rts = rts_smooth(*linear, fr, cfg.decouple_rts);
    clock.lap("kalman_rts");
  }

  const ParticleHistory ph = pf_run(model, y, cfg.particles, derive_seed(cfg.seed, 1), Exec::parallel);
  clock.lap("particle_filter");
  const SmootherResult single = smooth_backward(model, y, ph, cfg.iter, Exec::parallel);
  report.converged_steps = single.converged_steps();
  clock.lap("smoother");

  std::vector<Vector> xhat;
  std::vector<Matrix> covs;
  std::vector<Vector> spread;
  if (cfg.replicates >= 2) {
    RepeatedSamplingOptions opt;
    opt.replicates = cfg.replicates;
    opt.particles = cfg.particles;
    opt.iter = cfg.iter;
    opt.seed = derive_seed(cfg.seed, 2);
    const CovEstimate est = repeated_sampling(model, y, opt);
    xhat = est.means;
    covs = est.covs;
    long converged = 0;
    for (int k = 0; k < n; ++k) converged += est.effective[static_cast<std::size_t>(k)];
    report.convergence_rate = static_cast<double>(converged) / (static_cast<double>(cfg.replicates) * n);

    spread.assign(static_cast<std::size_t>(n) + 1, Vector::Zero(p));
    int used = 0;
    for (const auto& means : est.replicate_means) {
      if (means.empty()) continue;
      ++used;
      for (int k = 0; k <= n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        spread[i] += (means[i] - traj.states[i]).array().square().matrix();
      }
    }
    for (auto& s : spread) s = (s / std::max(used - 1, 1)).cwiseSqrt();
    clock.lap("repeated_sampling");
  } else {
    xhat = single.means;
    std::vector<InfoBlocks> blocks;
    for (const auto& e : single.evals) blocks.push_back({e.info_xi, e.cross_k_next, e.cross_next_k});
    covs = covariance_recursion(blocks, terminal_covariance(ph).cov);
    int converged = 0;
    for (int k = 0; k < n; ++k) converged += single.diagnostics[static_cast<std::size_t>(k)].converged ? 1 : 0;
    report.convergence_rate = static_cast<double>(converged) / n;
    clock.lap("covariance");
  }

  long inside = 0;
  for (int k = 0; k <= n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    StudyRow row;
    row.k = k;
    row.x_true = traj.states[i];
    row.xhat_smc = xhat[i];
    row.sigma_hat = covs[i].diagonal().cwiseMax(0.0).cwiseSqrt();
    row.ci_lo = row.xhat_smc - 1.96 * row.sigma_hat;
    row.ci_hi = row.xhat_smc + 1.96 * row.sigma_hat;
    row.converged = single.diagnostics[i].converged;
    if (linear) {
      row.xhat_filt = fr.at(k).x_filt;
      row.xhat_rts = rts.means[i];
      row.sigma_theory = rts.covs[i].diagonal().cwiseSqrt();
    } else {
      row.xhat_filt = filtered_mean(ph, k);
      row.xhat_rts = nan_vector(p);
      row.sigma_theory = nan_vector(p);
    }
    if (!spread.empty()) row.s_sample = spread[i];
    int row_inside = 0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (row.x_true[j] >= row.ci_lo[j] && row.x_true[j] <= row.ci_hi[j]) ++row_inside;
    inside += row_inside;
    if (row_inside == p) ++report.steps_covered;
    report.rows.push_back(std::move(row));
  }
  report.coverage_fraction = static_cast<double>(inside) / (static_cast<double>(p) * (n + 1));
  return report;
}

} // namespace

RunReport run_linear_study(const ExperimentConfig& cfg) {
  const LinearGaussianModel model = build_linear_model(cfg);
  return run_pipeline(cfg, model, &model);
}

RunReport run_nonlinear_study(const ExperimentConfig& cfg) {
  if (cfg.model.kind != "tanh") throw ConfigError("model.kind is not 'tanh'");
  const auto model = build_model(cfg);
  return run_pipeline(cfg, *model, nullptr);
}

RunReport run_study(const ExperimentConfig& cfg) {
  return cfg.model.kind == "linear" ? run_linear_study(cfg) : run_nonlinear_study(cfg);
}

} // namespace mlsmooth

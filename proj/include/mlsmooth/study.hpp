// The two simulation studies: a three-state linear system where every SMC
// quantity has a closed-form counterpart, and the scalar tanh system.

#ifndef MLSMOOTH_STUDY_HPP
#define MLSMOOTH_STUDY_HPP

#include "mlsmooth/config.hpp"
#include "mlsmooth/covariance.hpp"

#include <map>
#include <string>
#include <vector>

namespace mlsmooth {

struct StudyRow {
  int k = 0;
  Vector x_true;
  Vector xhat_filt;     // Kalman for the linear study, particle filter otherwise
  Vector xhat_rts;      // NaN for the nonlinear study
  Vector xhat_smc;      // replicate-averaged smoothed state (single pass when N = 1)
  Vector sigma_theory;  // sqrt(diag) of the RTS covariance; NaN for the nonlinear study
  Vector sigma_hat;     // sqrt(diag) of the recursed covariance estimate
  Vector ci_lo;
  Vector ci_hi;
  Vector s_sample;      // replicate spread around the truth; empty unless N >= 2
  bool converged = false;
};

struct RunReport {
  std::string kind;
  std::uint64_t seed = 0;
  int particles = 0;
  int replicates = 0;
  std::vector<StudyRow> rows;
  int steps_covered = 0;          // rows whose every component lies inside its interval
  double coverage_fraction = 0.0; // component-level fraction inside the interval
  int converged_steps = 0;        // steps converged in the reported smoothing pass
  double convergence_rate = 0.0;  // across all replicate passes
  std::vector<std::pair<std::string, double>> timings;  // seconds, in pipeline order
};

/// simulate -> Kalman/RTS -> particle filter -> EM-gradient smoother ->
/// repeated sampling -> covariance recursion.
RunReport run_linear_study(const ExperimentConfig& cfg);

/// Same pipeline on the tanh system, plus sample standard errors of the
/// replicate smoothed states around the truth.
RunReport run_nonlinear_study(const ExperimentConfig& cfg);

/// Dispatches on cfg.model.kind.
RunReport run_study(const ExperimentConfig& cfg);

} // namespace mlsmooth

#endif // MLSMOOTH_STUDY_HPP

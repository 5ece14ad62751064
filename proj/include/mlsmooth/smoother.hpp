// Backward maximum-likelihood smoothing: for k = n-1 down to 0 the score of
// xi = (x_k, x_{k+1}, y_{0:n}) is driven to zero by Newton, EM-gradient or
// BHHH iterations with x_{k+1} fixed at its smoothed value.

#ifndef MLSMOOTH_SMOOTHER_HPP
#define MLSMOOTH_SMOOTHER_HPP

#include "mlsmooth/inference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mlsmooth {

enum class Scheme { newton, em_gradient, bhhh };

std::string to_string(Scheme scheme);
/// Accepts "newton", "em_gradient" (or "em-gradient", "em") and "bhhh".
Scheme parse_scheme(const std::string& name);

enum class TerminalRule {
  filtered_mean,  // x^s_{n|n} = x_{n|n}
  maximize,       // iterate the no-next-state score at k = n from x_{n|n}
};

struct IterationConfig {
  Scheme scheme = Scheme::em_gradient;
  double epsilon = 1e-6;   // on the max-norm of the iterate difference
  int max_iters = 200;
  double damping = 1.0;    // every step is scaled by this factor, in (0, 1]
  // A step is halved (at most max_halvings times) while it multiplies ||S||
  // by more than growth_limit or lowers the step objective.
  double growth_limit = 10.0;
  int max_halvings = 6;
  TerminalRule terminal = TerminalRule::filtered_mean;

  void validate() const;  // throws std::invalid_argument
};

/// Which matrix produced an accepted step.
struct StepSource {
  Scheme scheme = Scheme::newton;
  bool ridge = false;
};

/// x + [J^xi]^{-1} S, or nullopt when J^xi is not positive definite.
std::optional<Vector> newton_step(const Vector& x, const ScoreEval& eval);

/// x + [J^z]^{-1} S. A non-PD J^z falls through to bhhh_step; `source`
/// reports what was used.
Vector em_gradient_step(const Vector& x, const ScoreEval& eval, StepSource* source = nullptr);

/// x + M_z^{-1} S. A rank-deficient M_z gets a ridge of 1e-8 times its trace scale.
Vector bhhh_step(const Vector& x, const ScoreEval& eval, StepSource* source = nullptr);

struct StepDiagnostics {
  int iterations = 0;
  double score_norm = 0.0;    // Euclidean norm of the final score
  double last_step = 0.0;     // max-norm of the final iterate difference
  bool converged = false;
  int newton_fallbacks = 0;   // Newton steps replaced by EM-gradient
  int mz_substitutions = 0;   // EM-gradient steps replaced by BHHH
  int ridge_events = 0;
  int halvings = 0;
  std::string failure;        // empty unless the step raised
};

struct SmootherResult {
  std::vector<Vector> means;              // x^s_{k|n}, k = 0..n
  std::vector<StepDiagnostics> diagnostics;  // k = 0..n; step n is trivially converged under filtered_mean
  std::vector<ScoreEval> evals;           // k = 0..n-1, at (x^s_{k|n}, x^s_{k+1|n})
  Scheme scheme = Scheme::em_gradient;
  double epsilon = 0.0;

  int converged_steps() const;
  bool all_converged() const { return converged_steps() == static_cast<int>(diagnostics.size()); }
};

/// The backward pass. Every step is initialized at the filtered mean;
/// non-converged steps are flagged and the pass continues from the last iterate.
SmootherResult smooth_backward(const ScoreBackend& backend, const IterationConfig& cfg);

/// Convenience overload on the particle backend.
SmootherResult smooth_backward(const StateSpaceModel& model, const std::vector<Vector>& y, const ParticleHistory& ph,
                               const IterationConfig& cfg, Exec exec = Exec::serial);

struct MonotoneReport {
  std::vector<double> logliks;  // incomplete_loglik_linear at every iterate, start included
  int violations = 0;           // decreases beyond the slack
  double max_decrease = 0.0;
  bool reached_root = false;
};

/// Runs exact EM-gradient iterations at step k of a linear model and checks
/// that incomplete_loglik_linear never decreases by more than slack * max(1, |l|).
MonotoneReport em_local_equivalence_check(const LinearGaussianModel& model, const FilterResult& fr, int k,
                                          const Vector& x_start, const Vector& x_next, int max_iters = 100,
                                          double epsilon = 1e-12, double slack = 1e-12);

} // namespace mlsmooth

#endif // MLSMOOTH_SMOOTHER_HPP

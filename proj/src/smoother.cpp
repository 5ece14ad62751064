#include "mlsmooth/smoother.hpp"

#include <algorithm>
#include <cmath>

namespace mlsmooth {

namespace {

std::optional<Vector> solve_spd(const Matrix& a, const Vector& b) {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) return std::nullopt;
  Vector x = llt.solve(b);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

double max_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Proposal {
  Vector delta;
  StepSource source;
};

Proposal propose(Scheme scheme, const Vector& x, const ScoreEval& eval) {
  Proposal p;
  // At k = 0 the prior is exact, M_z collapses to S S^T and carries no
  // curvature; J^z (equal to J^xi there) is used instead.
  if (scheme == Scheme::bhhh && eval.step == 0) scheme = Scheme::em_gradient;
  if (scheme == Scheme::newton) {
    if (auto next = newton_step(x, eval)) {
      p.delta = *next - x;
      p.source = {Scheme::newton, false};
      return p;
    }
    scheme = Scheme::em_gradient;
  }
  const Vector next = scheme == Scheme::em_gradient ? em_gradient_step(x, eval, &p.source)
                                                    : bhhh_step(x, eval, &p.source);
  p.delta = next - x;
  return p;
}

void record(StepDiagnostics& d, Scheme requested, const StepSource& used) {
  if (requested == Scheme::newton && used.scheme != Scheme::newton) ++d.newton_fallbacks;
  if (requested != Scheme::bhhh && used.scheme == Scheme::bhhh) ++d.mz_substitutions;
  if (used.ridge) ++d.ridge_events;
}

double info_scale(const ScoreEval& e) { return std::max(e.info_xi.norm(), e.info_z.norm()); }

/// Iterates one step's score equation from x0. Returns the final iterate and
/// leaves the matching evaluation in `eval`.
Vector iterate_step(const StepEvaluator& ev, const Vector& x0, const Vector* x_next, const IterationConfig& cfg,
                    StepDiagnostics& diag, ScoreEval& eval) {
  Vector x = x0;
  eval = ev.evaluate(x, x_next);
  bool stopped = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Proposal p = propose(cfg.scheme, x, eval);
    record(diag, cfg.scheme, p.source);
    Vector delta = cfg.damping * p.delta;
    const double s_norm = eval.score.norm();

    // Halve until the score does not blow up and, where the objective is
    // available, it does not go down. Away from the mode J^z can be
    // indefinite and full steps cycle between the two sides of the root.
    Vector x_new;
    ScoreEval e_new;
    bool evaluated = false;
    for (int h = 0;; ++h) {
      x_new = x + delta;
      evaluated = false;
      if (x_new.allFinite()) {
        try {
          e_new = ev.evaluate(x_new, x_next);
          evaluated = e_new.score.allFinite() && !std::isinf(e_new.objective);
        } catch (const NumericError&) {
        }
      }
      const double obj = eval.objective;
      const bool ascent = std::isnan(obj) || std::isnan(e_new.objective) ||
                          e_new.objective >= obj - 1e-12 * std::max(1.0, std::abs(obj));
      if (evaluated && ascent && e_new.score.norm() <= cfg.growth_limit * std::max(s_norm, 1e-300)) break;
      if (h == cfg.max_halvings) break;
      delta *= 0.5;
      ++diag.halvings;
    }
    if (!evaluated) {
      diag.failure = "no admissible step after halving";
      break;
    }
    diag.iterations = it + 1;
    diag.last_step = max_norm(x_new - x);
    x = std::move(x_new);
    eval = std::move(e_new);
    if (diag.last_step < cfg.epsilon) {
      stopped = true;
      break;
    }
  }
  diag.score_norm = eval.score.norm();
  diag.converged = stopped && diag.score_norm <= 10.0 * cfg.epsilon * (1.0 + info_scale(eval));
  return x;
}

} // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::newton: return "newton";
    case Scheme::em_gradient: return "em_gradient";
    case Scheme::bhhh: return "bhhh";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "newton") return Scheme::newton;
  if (name == "em_gradient" || name == "em-gradient" || name == "em") return Scheme::em_gradient;
  if (name == "bhhh") return Scheme::bhhh;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected newton, em_gradient or bhhh)");
}

void IterationConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  if (!(growth_limit > 0.0)) throw std::invalid_argument("growth_limit must be positive");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be non-negative");
}

std::optional<Vector> newton_step(const Vector& x, const ScoreEval& eval) {
  auto delta = solve_spd(eval.info_xi, eval.score);
  if (!delta) return std::nullopt;
  return Vector(x + *delta);
}

Vector em_gradient_step(const Vector& x, const ScoreEval& eval, StepSource* source) {
  if (auto delta = solve_spd(eval.info_z, eval.score)) {
    if (source) *source = {Scheme::em_gradient, false};
    return x + *delta;
  }
  return bhhh_step(x, eval, source);
}

Vector bhhh_step(const Vector& x, const ScoreEval& eval, StepSource* source) {
  if (auto delta = solve_spd(eval.m_z, eval.score)) {
    if (source) *source = {Scheme::bhhh, false};
    return x + *delta;
  }
  const Eigen::Index p = x.size();
  const double ridge = 1e-8 * trace_scale(eval.m_z);
  auto delta = solve_spd(eval.m_z + ridge * Matrix::Identity(p, p), eval.score);
  if (!delta) throw NumericError("bhhh_step: regularized M_z is not positive definite", eval.step);
  if (source) *source = {Scheme::bhhh, true};
  return x + *delta;
}

int SmootherResult::converged_steps() const {
  return static_cast<int>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                        [](const StepDiagnostics& d) { return d.converged; }));
}

SmootherResult smooth_backward(const ScoreBackend& backend, const IterationConfig& cfg) {
  cfg.validate();
  const int n = backend.horizon();
  SmootherResult r;
  r.scheme = cfg.scheme;
  r.epsilon = cfg.epsilon;
  r.means.resize(static_cast<std::size_t>(n) + 1);
  r.diagnostics.resize(static_cast<std::size_t>(n) + 1);
  r.evals.resize(static_cast<std::size_t>(n));

  auto run = [&](int k, const Vector* x_next, ScoreEval& eval) {
    auto& diag = r.diagnostics[static_cast<std::size_t>(k)];
    Vector x0 = backend.filtered_mean(k);
    try {
      const auto ev = backend.at_step(k);
      r.means[static_cast<std::size_t>(k)] = iterate_step(*ev, x0, x_next, cfg, diag, eval);
    } catch (const std::exception& e) {
      diag.failure = e.what();
      diag.converged = false;
      r.means[static_cast<std::size_t>(k)] = std::move(x0);
    }
  };

  if (cfg.terminal == TerminalRule::maximize) {
    ScoreEval terminal;
    run(n, nullptr, terminal);
  } else {
    r.means[static_cast<std::size_t>(n)] = backend.filtered_mean(n);
    r.diagnostics[static_cast<std::size_t>(n)].converged = true;
  }
  for (int k = n - 1; k >= 0; --k) run(k, &r.means[static_cast<std::size_t>(k) + 1], r.evals[static_cast<std::size_t>(k)]);
  return r;
}

SmootherResult smooth_backward(const StateSpaceModel& model, const std::vector<Vector>& y, const ParticleHistory& ph,
                               const IterationConfig& cfg, Exec exec) {
  const SmcBackend backend(model, y, ph, exec);
  return smooth_backward(backend, cfg);
}

MonotoneReport em_local_equivalence_check(const LinearGaussianModel& model, const FilterResult& fr, int k,
                                          const Vector& x_start, const Vector& x_next, int max_iters, double epsilon,
                                          double slack) {
  const KalmanBackend backend(model, fr);
  const auto ev = backend.at_step(k);
  const Vector* next = k < fr.horizon() ? &x_next : nullptr;
  MonotoneReport rep;
  Vector x = x_start;
  double prev = incomplete_loglik_linear(model, fr, k, x, x_next);
  rep.logliks.push_back(prev);
  for (int it = 0; it < max_iters; ++it) {
    const ScoreEval e = ev->evaluate(x, next);
    const Vector x_new = em_gradient_step(x, e);
    const double cur = incomplete_loglik_linear(model, fr, k, x_new, x_next);
    rep.logliks.push_back(cur);
    const double drop = prev - cur;
    if (drop > slack * std::max(1.0, std::abs(prev))) ++rep.violations;
    rep.max_decrease = std::max(rep.max_decrease, drop);
    const double step = max_norm(x_new - x);
    x = x_new;
    prev = cur;
    if (step < epsilon) {
      rep.reached_root = true;
      break;
    }
  }
  return rep;
}

} // namespace mlsmooth

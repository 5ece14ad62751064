#include "mlsmooth/inference.hpp"

#include <cmath>
#include <limits>

namespace mlsmooth {

namespace {

const Vector* optional_next(const Vector& x_next) { return x_next.size() == 0 ? nullptr : &x_next; }

void require_next(const StateSpaceModel& model, int k, const Vector* x_next) {
  if (!x_next && k != model.horizon())
    throw std::invalid_argument("next state required at step " + std::to_string(k));
  if (x_next && k >= model.horizon())
    throw std::out_of_range("no next state exists at step " + std::to_string(k));
}

class SmcStep final : public StepEvaluator {
public:
  SmcStep(const StateSpaceModel& model, const Vector& y_k, const ParticleHistory& ph, int k, Exec exec)
      : model_(model), y_k_(y_k), k_(k) {
    if (k < 0 || k > ph.horizon()) throw std::out_of_range("step " + std::to_string(k) + " outside history");
    if (k > 0) {
      kernel_ = std::make_unique<BackwardKernel>(model, ph, k, exec);
      log_alpha_ = &ph.log_weights.at(static_cast<std::size_t>(k) - 1);
    }
  }

  ScoreEval evaluate(const Vector& x, const Vector* x_next) const override {
    require_next(model_, k_, x_next);
    const Eigen::Index p = x.size();
    ScoreEval e;
    e.step = k_;

    Vector base = model_.d_meas(k_, y_k_, x);
    e.info_z = model_.h_meas(k_, x);
    if (x_next) {
      base += model_.d_trans_in(k_ + 1, *x_next, x);
      e.info_z += model_.h_trans_in(k_ + 1, *x_next, x);
      auto [kn, nk] = info_cross(model_, k_, x);
      e.cross_k_next = std::move(kn);
      e.cross_next_k = std::move(nk);
    }

    e.objective = model_.measurement_logpdf(k_, y_k_, x);
    if (x_next) e.objective += model_.transition_logpdf(k_ + 1, *x_next, x);

    Matrix cov = Matrix::Zero(p, p);
    if (k_ == 0) {
      e.score = base + model_.d_initial(x);
      e.info_z += model_.h_initial();
      e.objective += model_.initial_logpdf(x);
    } else {
      Vector w;
      Matrix g;
      double log_mixture = 0.0;
      kernel_->evaluate(x, w, &g, &log_mixture);
      e.objective += log_mixture;
      const Vector g_bar = g * w;
      e.score = base + g_bar;
      e.info_z += model_.h_trans_out(k_);
      // Centered conditional covariance of the transition score.
      Vector d(p);
      for (Eigen::Index m = 0; m < g.cols(); ++m) {
        d = g.col(m) - g_bar;
        cov.noalias() += w[m] * d * d.transpose();
      }
      cov = floor_eigenvalues(cov, 0.0);
    }
    e.info_z = symmetrize(e.info_z);
    e.info_xi = symmetrize(e.info_z - cov);
    e.m_z = symmetrize(e.score * e.score.transpose() + cov);
    return e;
  }

  std::optional<double> loglik(const Vector& x, const Vector* x_next) const override { return value(x, x_next); }

  double value(const Vector& x, const Vector* x_next) const {
    require_next(model_, k_, x_next);
    double value = model_.measurement_logpdf(k_, y_k_, x);
    if (x_next) value += model_.transition_logpdf(k_ + 1, *x_next, x);
    if (k_ == 0) return value + model_.initial_logpdf(x);
    // log sum_m alpha_m f(x | x^m) through the kernel's stabilized terms.
    const Matrix& atoms = kernel_->atoms();
    double top = -std::numeric_limits<double>::infinity();
    Vector terms(atoms.cols());
    for (Eigen::Index m = 0; m < atoms.cols(); ++m) {
      terms[m] = (*log_alpha_)[m] + model_.transition_logpdf(k_, x, atoms.col(m));
      top = std::max(top, terms[m]);
    }
    if (!std::isfinite(top)) throw DegenerateWeightsError("transition mixture vanishes", k_);
    return value + top + std::log((terms.array() - top).exp().sum());
  }

private:
  const StateSpaceModel& model_;
  const Vector& y_k_;
  int k_;
  std::unique_ptr<BackwardKernel> kernel_;
  const Vector* log_alpha_ = nullptr;
};

SmcStep make_step(const StateSpaceModel& model, int k, const Vector& y_k, const ParticleHistory& ph) {
  return SmcStep(model, y_k, ph, k, Exec::serial);
}

class KalmanStep final : public StepEvaluator {
public:
  KalmanStep(const LinearGaussianModel& model, const FilterResult& fr, int k) : model_(model), k_(k) {
    const int n = fr.horizon();
    if (k < 0 || k > n) throw std::out_of_range("step " + std::to_string(k) + " outside filter horizon");
    const FilterStep& s = fr.at(k);
    P_inv_ = spd_inverse(s.P_filt, k);
    P_inv_mean_ = P_inv_ * s.x_filt;
    const Matrix& H = model.H(k);
    info_z_ = H.transpose() * spd_inverse(model.R(k)) * H + (k == 0 ? spd_inverse(model.P0()) : model.Q_inverse(k));
    info_xi_ = P_inv_;
    if (k < n) {
      const InfoBlocks b = info_blocks_linear(model, fr, k);
      const Matrix FtQiF = b.x_next * model.F(k + 1);
      info_z_ += FtQiF;
      info_xi_ += FtQiF;
      blocks_ = b;
    }
    info_z_ = symmetrize(info_z_);
    info_xi_ = symmetrize(info_xi_);
  }

  ScoreEval evaluate(const Vector& x, const Vector* x_next) const override {
    require_next(model_, k_, x_next);
    ScoreEval e;
    e.step = k_;
    e.score = P_inv_mean_ - P_inv_ * x;
    if (x_next) {
      e.score += model_.d_trans_in(k_ + 1, *x_next, x);
      e.info_xi = info_xi_;
      e.info_z = info_z_;
      e.cross_k_next = blocks_.x_next;
      e.cross_next_k = blocks_.next_x;
    } else {
      // Terminal form: no forward transition in either matrix.
      e.info_xi = P_inv_;
      e.info_z = info_z_;
    }
    e.m_z = symmetrize(e.score * e.score.transpose() + (e.info_z - e.info_xi));
    e.objective = *loglik(x, x_next);
    return e;
  }

  std::optional<double> loglik(const Vector& x, const Vector* x_next) const override {
    require_next(model_, k_, x_next);
    double value = P_inv_mean_.dot(x) - 0.5 * x.dot(P_inv_ * x);
    if (x_next) value += model_.transition_logpdf(k_ + 1, *x_next, x);
    return value;
  }

private:
  const LinearGaussianModel& model_;
  int k_;
  Matrix P_inv_;
  Vector P_inv_mean_;
  Matrix info_z_, info_xi_;
  InfoBlocks blocks_;
};

} // namespace

SmcBackend::SmcBackend(const StateSpaceModel& model, const std::vector<Vector>& y, const ParticleHistory& ph, Exec exec)
    : model_(&model), y_(&y), ph_(&ph), exec_(exec) {
  if (ph.horizon() != model.horizon() || static_cast<int>(y.size()) != model.horizon() + 1)
    throw std::invalid_argument("SmcBackend: model, observations and particle history disagree on the horizon");
}

Vector SmcBackend::filtered_mean(int k) const { return mlsmooth::filtered_mean(*ph_, k); }

Matrix SmcBackend::terminal_covariance() const { return filtered_covariance(*ph_, horizon()); }

std::unique_ptr<StepEvaluator> SmcBackend::at_step(int k) const {
  return std::make_unique<SmcStep>(*model_, y_->at(static_cast<std::size_t>(k)), *ph_, k, exec_);
}

KalmanBackend::KalmanBackend(const LinearGaussianModel& model, const FilterResult& fr) : model_(&model), fr_(&fr) {
  if (fr.horizon() != model.horizon()) throw std::invalid_argument("KalmanBackend: horizon mismatch");
}

std::unique_ptr<StepEvaluator> KalmanBackend::at_step(int k) const {
  return std::make_unique<KalmanStep>(*model_, *fr_, k);
}

Vector complete_score(const StateSpaceModel& model, int k, const Vector& x_prev, const Vector& x_k,
                      const Vector& x_next, const Vector& y_k) {
  if (k < 1 || k > model.horizon() - 1)
    throw std::out_of_range("complete_score: step " + std::to_string(k) + " outside 1..n-1");
  return model.d_meas(k, y_k, x_k) + model.d_trans_in(k + 1, x_next, x_k) + model.d_trans_out(k, x_k, x_prev);
}

Vector smc_score(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next, const Vector& y_k,
                 const ParticleHistory& ph) {
  return make_step(model, k, y_k, ph).evaluate(x_k, optional_next(x_next)).score;
}

Matrix smc_info_z(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next,
                  const ParticleHistory& ph) {
  const Vector y_dummy = Vector::Zero(model.obs_dim());
  return make_step(model, k, y_dummy, ph).evaluate(x_k, optional_next(x_next)).info_z;
}

Matrix smc_info_xi(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next,
                   const ParticleHistory& ph) {
  const Vector y_dummy = Vector::Zero(model.obs_dim());
  return make_step(model, k, y_dummy, ph).evaluate(x_k, optional_next(x_next)).info_xi;
}

Matrix m_z_matrix(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next, const Vector& y_k,
                  const ParticleHistory& ph) {
  const Vector* next = optional_next(x_next);
  require_next(model, k, next);
  Vector base = model.d_meas(k, y_k, x_k);
  if (next) base += model.d_trans_in(k + 1, *next, x_k);
  if (k == 0) {
    const Vector g = base + model.d_initial(x_k);
    return g * g.transpose();
  }
  const Vector w = backward_kernel_weights(k, x_k, ph, model);
  const Matrix& atoms = ph.atoms(k - 1);
  Matrix out = Matrix::Zero(x_k.size(), x_k.size());
  for (Eigen::Index m = 0; m < atoms.cols(); ++m) {
    const Vector g = base + model.d_trans_out(k, x_k, atoms.col(m));
    out.noalias() += w[m] * g * g.transpose();
  }
  return symmetrize(out);
}

double smc_loglik(const StateSpaceModel& model, int k, const Vector& x_k, const Vector& x_next, const Vector& y_k,
                  const ParticleHistory& ph) {
  return make_step(model, k, y_k, ph).value(x_k, optional_next(x_next));
}

std::pair<Matrix, Matrix> info_cross(const StateSpaceModel& model, int k, const Vector& x_k) {
  Matrix next_k = model.h_trans_cross(k + 1, x_k);
  Matrix k_next = next_k.transpose();
  return {std::move(k_next), std::move(next_k)};
}

} // namespace mlsmooth

#include "mlsmooth/kalman.hpp"

#include <string>

namespace mlsmooth {

namespace {

void require_observations(const StateSpaceModel& model, const std::vector<Vector>& y) {
  if (static_cast<int>(y.size()) != model.horizon() + 1)
    throw std::invalid_argument("expected " + std::to_string(model.horizon() + 1) + " observations, got " +
                                std::to_string(y.size()));
  for (const auto& yk : y)
    if (yk.size() != model.obs_dim()) throw std::invalid_argument("observation dimension mismatch");
}

void require_pair_step(const FilterResult& fr, int k) {
  if (k < 0 || k >= fr.horizon())
    throw std::out_of_range("pair step " + std::to_string(k) + " outside 0.." + std::to_string(fr.horizon() - 1));
}

} // namespace

FilterResult kalman_filter(const LinearGaussianModel& model, const std::vector<Vector>& y) {
  require_observations(model, y);
  const int n = model.horizon();
  const Eigen::Index p = model.state_dim();
  const Matrix I = Matrix::Identity(p, p);
  FilterResult fr;
  fr.steps.resize(static_cast<std::size_t>(n) + 1);

  for (int k = 0; k <= n; ++k) {
    FilterStep& s = fr.steps[static_cast<std::size_t>(k)];
    if (k == 0) {
      s.x_pred = model.mu();
      s.P_pred = model.P0();
    } else {
      const FilterStep& prev = fr.steps[static_cast<std::size_t>(k) - 1];
      const Matrix& F = model.F(k);
      s.x_pred = model.transition_mean(k, prev.x_filt);
      s.P_pred = symmetrize(F * prev.P_filt * F.transpose() + model.Q(k));
      s.cross = prev.P_pred * (F - F * prev.gain * model.H(k - 1)).transpose();
    }
    const Matrix& H = model.H(k);
    const Matrix innovation_cov = symmetrize(H * s.P_pred * H.transpose() + model.R(k));
    const auto llt = cholesky(innovation_cov, k);
    s.gain = llt.solve(H * s.P_pred).transpose();
    s.x_filt = s.x_pred + s.gain * (y[static_cast<std::size_t>(k)] - H * s.x_pred);
    const Matrix A = I - s.gain * H;
    s.P_filt = symmetrize(A * s.P_pred * A.transpose() + s.gain * model.R(k) * s.gain.transpose());
  }
  return fr;
}

RtsResult rts_smooth(const LinearGaussianModel& model, const FilterResult& fr, bool decouple) {
  const int n = fr.horizon();
  if (n != model.horizon()) throw std::invalid_argument("rts_smooth: filter horizon does not match model");
  RtsResult out;
  out.means.resize(static_cast<std::size_t>(n) + 1);
  out.covs.resize(static_cast<std::size_t>(n) + 1);
  out.gains.resize(static_cast<std::size_t>(n) + 1);
  out.means[static_cast<std::size_t>(n)] = fr.at(n).x_filt;
  out.covs[static_cast<std::size_t>(n)] = fr.at(n).P_filt;
  for (int k = n - 1; k >= 0; --k) {
    const auto i = static_cast<std::size_t>(k);
    const FilterStep& cur = fr.at(k);
    const FilterStep& next = fr.at(k + 1);
    Matrix C;
    if (decouple) {
      C = Matrix::Zero(model.state_dim(), model.state_dim());
    } else {
      const auto llt = cholesky(next.P_pred, k + 1);
      C = llt.solve(model.F(k + 1) * cur.P_filt).transpose();
    }
    out.gains[i] = C;
    out.means[i] = cur.x_filt + C * (out.means[i + 1] - next.x_pred);
    out.covs[i] = symmetrize(cur.P_filt + C * (out.covs[i + 1] - next.P_pred) * C.transpose());
  }
  return out;
}

Vector incomplete_score_linear(const LinearGaussianModel& model, const FilterResult& fr, int k, const Vector& x_k,
                               const Vector& x_next) {
  const FilterStep& s = fr.at(k);
  const auto llt = cholesky(s.P_filt, k);
  Vector score = llt.solve(s.x_filt - x_k);
  if (k < fr.horizon()) score += model.d_trans_in(k + 1, x_next, x_k);
  return score;
}

double incomplete_loglik_linear(const LinearGaussianModel& model, const FilterResult& fr, int k, const Vector& x_k,
                                const Vector& x_next) {
  const FilterStep& s = fr.at(k);
  double value = gaussian_logpdf(x_k, s.x_filt, s.P_filt, k);
  if (k < fr.horizon()) value += model.transition_logpdf(k + 1, x_next, x_k);
  return value;
}

InfoBlocks info_blocks_linear(const LinearGaussianModel& model, const FilterResult& fr, int k) {
  require_pair_step(fr, k);
  const Matrix& F = model.F(k + 1);
  const Matrix& Qi = model.Q_inverse(k + 1);
  InfoBlocks b;
  b.xx = symmetrize(spd_inverse(fr.at(k).P_filt, k) + F.transpose() * Qi * F);
  b.x_next = F.transpose() * Qi;
  b.next_x = Qi * F;
  return b;
}

Vector conditional_mean_previous(const FilterResult& fr, int k, const Vector& x_k) {
  if (k < 1 || k > fr.horizon()) throw std::out_of_range("conditional_mean_previous: step outside 1..n");
  const FilterStep& s = fr.at(k);
  const auto llt = cholesky(s.P_pred, k);
  return fr.at(k - 1).x_filt + s.cross * llt.solve(x_k - s.x_pred);
}

BackwardInformation backward_information(const LinearGaussianModel& model, const std::vector<Vector>& y) {
  require_observations(model, y);
  const int n = model.horizon();
  BackwardInformation bi;
  bi.omega.resize(static_cast<std::size_t>(n) + 1);
  bi.nu.resize(static_cast<std::size_t>(n) + 1);
  auto add_measurement = [&](int k, Matrix& omega, Vector& nu) {
    const Matrix& H = model.H(k);
    const Matrix Ri = spd_inverse(model.R(k));
    omega += H.transpose() * Ri * H;
    nu += H.transpose() * Ri * y[static_cast<std::size_t>(k)];
  };
  const Eigen::Index p = model.state_dim();
  Matrix omega = Matrix::Zero(p, p);
  Vector nu = Vector::Zero(p);
  add_measurement(n, omega, nu);
  bi.omega[static_cast<std::size_t>(n)] = symmetrize(omega);
  bi.nu[static_cast<std::size_t>(n)] = nu;
  for (int k = n - 1; k >= 0; --k) {
    // Integrate the step-(k+1) information against N(x_{k+1}; F x_k + b, Q).
    const Matrix& F = model.F(k + 1);
    const Matrix& Qi = model.Q_inverse(k + 1);
    const Vector b = model.control_offset(k + 1);
    const auto A = cholesky(Qi + bi.omega[static_cast<std::size_t>(k) + 1], k + 1);
    const Matrix omega_tilde = symmetrize(Qi - Qi * A.solve(Qi));
    const Vector nu_tilde = Qi * A.solve(bi.nu[static_cast<std::size_t>(k) + 1]);
    omega = F.transpose() * omega_tilde * F;
    nu = F.transpose() * (nu_tilde - omega_tilde * b);
    add_measurement(k, omega, nu);
    bi.omega[static_cast<std::size_t>(k)] = symmetrize(omega);
    bi.nu[static_cast<std::size_t>(k)] = nu;
  }
  return bi;
}

Vector incomplete_score_next_linear(const LinearGaussianModel& model, const FilterResult& fr,
                                    const BackwardInformation& bi, int k, const Vector& x_k, const Vector& x_next) {
  require_pair_step(fr, k);
  const auto i = static_cast<std::size_t>(k) + 1;
  return model.d_trans_out(k + 1, x_next, x_k) - bi.omega[i] * x_next + bi.nu[i];
}

} // namespace mlsmooth

#include "mlsmooth/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mlsmooth {

namespace {

std::string with_step(const std::string& what, std::optional<int> step) {
  if (!step) return what;
  return what + " (step " + std::to_string(*step) + ")";
}

void require_finite(double v) {
  if (!std::isfinite(v)) throw NumericError("finite difference: non-finite function value");
}

} // namespace

NumericError::NumericError(const std::string& what, std::optional<int> step)
    : std::runtime_error(with_step(what, step)), step_(step) {}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Eigen::LLT<Matrix> cholesky(const Matrix& a, std::optional<int> step) {
  if (a.rows() != a.cols()) throw NumericError("cholesky: matrix is not square", step);
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) throw NumericError("cholesky: matrix is not positive definite", step);
  // LLT only checks pivots for positivity; reject factors that lost precision entirely.
  const auto d = llt.matrixLLT().diagonal();
  if (!d.allFinite() || d.minCoeff() <= 0.0) throw NumericError("cholesky: matrix is not positive definite", step);
  return llt;
}

bool is_positive_definite(const Matrix& a) {
  if (a.rows() != a.cols() || !a.allFinite()) return false;
  Eigen::LLT<Matrix> llt(symmetrize(a));
  return llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

Matrix spd_inverse(const Matrix& a, std::optional<int> step) {
  auto llt = cholesky(a, step);
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

Matrix floor_eigenvalues(const Matrix& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  Vector ev = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

double trace_scale(const Matrix& a) {
  return std::max(a.diagonal().cwiseAbs().mean(), 1e-300);
}

double log_determinant(const Eigen::LLT<Matrix>& factor) {
  return 2.0 * factor.matrixLLT().diagonal().array().log().sum();
}

double gaussian_logpdf(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& cov_factor) {
  const Vector r = cov_factor.matrixL().solve(x - mean);
  const double d = static_cast<double>(x.size());
  return -0.5 * (r.squaredNorm() + d * std::log(2.0 * std::numbers::pi) + log_determinant(cov_factor));
}

double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& cov, std::optional<int> step) {
  if (x.size() != mean.size() || cov.rows() != x.size() || cov.cols() != x.size())
    throw NumericError("gaussian_logpdf: dimension mismatch", step);
  return gaussian_logpdf(x, mean, cholesky(cov, step));
}

double default_gradient_step(double v) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(v));
}

double default_hessian_step(double v) {
  static const double base = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));
  return base * std::max(1.0, std::abs(v));
}

Vector finite_diff_grad(const ScalarFunction& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = h > 0.0 ? h : default_gradient_step(x[i]);
    xp[i] = x[i] + hi;
    const double fp = f(xp);
    xp[i] = x[i] - hi;
    const double fm = f(xp);
    xp[i] = x[i];
    require_finite(fp);
    require_finite(fm);
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

Matrix finite_diff_hess(const ScalarFunction& f, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Matrix hess(n, n);
  Vector step(n);
  for (Eigen::Index i = 0; i < n; ++i) step[i] = h > 0.0 ? h : default_hessian_step(x[i]);

  const double f0 = f(x);
  require_finite(f0);
  Vector xp = x;
  auto eval = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    xp = x;
    xp[i] += si;
    xp[j] += sj;
    const double v = f(xp);
    require_finite(v);
    return v;
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = step[i];
    const double fp = eval(i, hi, i, 0.0);
    const double fm = eval(i, -hi, i, 0.0);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = step[j];
      const double fpp = eval(i, hi, j, hj);
      const double fpm = eval(i, hi, j, -hj);
      const double fmp = eval(i, -hi, j, hj);
      const double fmm = eval(i, -hi, j, -hj);
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return symmetrize(hess);
}

Matrix finite_diff_jacobian(const VectorFunction& f, const Vector& x, double h) {
  Matrix jac;
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = h > 0.0 ? h : default_gradient_step(x[i]);
    xp[i] = x[i] + hi;
    const Vector fp = f(xp);
    xp[i] = x[i] - hi;
    const Vector fm = f(xp);
    xp[i] = x[i];
    if (!fp.allFinite() || !fm.allFinite()) throw NumericError("finite difference: non-finite function value");
    if (jac.size() == 0) jac.resize(fp.size(), x.size());
    jac.col(i) = (fp - fm) / (2.0 * hi);
  }
  return jac;
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool psd_dominates(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw NumericError("psd_dominates: shape mismatch");
  if (tol < 0.0) tol = 1e-8 * std::max(trace_scale(a), trace_scale(b));
  const Matrix diff = symmetrize(a - b) + tol * Matrix::Identity(a.rows(), a.cols());
  return min_eigenvalue(diff) >= 0.0;
}

double relative_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace mlsmooth

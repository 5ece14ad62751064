// Dense small-matrix helpers, Gaussian log-densities and finite-difference
// derivative oracles. Dimensions in this library are small (p, q <= 10), so
// everything is built on dynamic-size Eigen types.

#ifndef MLSMOOTH_NUMERICS_HPP
#define MLSMOOTH_NUMERICS_HPP

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace mlsmooth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a factorization or density evaluation fails. Carries the time
/// step when the caller knows it.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what, std::optional<int> step = std::nullopt);
  std::optional<int> step() const { return step_; }

private:
  std::optional<int> step_;
};

/// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

/// Lower Cholesky factor of sym(a). Throws NumericError if sym(a) is not
/// positive definite.
Eigen::LLT<Matrix> cholesky(const Matrix& a, std::optional<int> step = std::nullopt);

bool is_positive_definite(const Matrix& a);

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
Matrix spd_inverse(const Matrix& a, std::optional<int> step = std::nullopt);

/// Symmetrizes and raises every eigenvalue below `floor` up to `floor`.
Matrix floor_eigenvalues(const Matrix& a, double floor);

/// Average absolute diagonal entry, at least 1e-300. Used to scale tolerances.
double trace_scale(const Matrix& a);

/// log N(x | mean, cov), evaluated through the Cholesky factor of cov.
double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& cov,
                       std::optional<int> step = std::nullopt);

/// Same as gaussian_logpdf but with a precomputed factor of the covariance.
double gaussian_logpdf(const Vector& x, const Vector& mean, const Eigen::LLT<Matrix>& cov_factor);

/// log |A| from a Cholesky factor.
double log_determinant(const Eigen::LLT<Matrix>& factor);

using ScalarFunction = std::function<double(const Vector&)>;
using VectorFunction = std::function<Vector(const Vector&)>;

/// Default central-difference step for component value v: cbrt(eps) * max(1, |v|).
double default_gradient_step(double v);
/// Default second-difference step: eps^(1/4) * max(1, |v|).
double default_hessian_step(double v);

/// Central differences. h <= 0 selects the per-component default step.
Vector finite_diff_grad(const ScalarFunction& f, const Vector& x, double h = 0.0);

/// Second-order central stencil, symmetrized. h <= 0 selects the default step.
Matrix finite_diff_hess(const ScalarFunction& f, const Vector& x, double h = 0.0);

/// Central-difference Jacobian of a vector-valued map; row i is d f_i / d x.
Matrix finite_diff_jacobian(const VectorFunction& f, const Vector& x, double h = 0.0);

/// True iff a - b + tol*I is positive semidefinite. tol < 0 selects
/// 1e-8 times the trace scale of a and b.
bool psd_dominates(const Matrix& a, const Matrix& b, double tol = -1.0);

/// Smallest eigenvalue of sym(a).
double min_eigenvalue(const Matrix& a);

/// Relative Frobenius distance ||a - b|| / max(||b||, 1e-300).
double relative_error(const Matrix& a, const Matrix& b);

} // namespace mlsmooth

#endif // MLSMOOTH_NUMERICS_HPP

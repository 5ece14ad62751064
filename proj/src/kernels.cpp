#include "mlsmooth/kernels.hpp"

#include <stdexcept>

namespace mlsmooth::kernels {

namespace {

constexpr Eigen::Index kMaxStateDim = 16;

template <typename Body>
void for_each_index(Exec exec, Eigen::Index count, Body&& body) {
  if (exec == Exec::serial) {
    for (Eigen::Index i = 0; i < count; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < count; ++i) body(i);
}

} // namespace

Matrix sample_initial(const StateSpaceModel& model, int count, std::uint64_t seed, Exec exec) {
  Matrix out(model.state_dim(), count);
  for_each_index(exec, count, [&](Eigen::Index m) {
    Rng rng(seed, Stream::initial, 0, static_cast<std::uint64_t>(m));
    out.col(m) = model.sample_initial(rng);
  });
  return out;
}

Matrix propagate(const StateSpaceModel& model, int k, const Matrix& prev, std::span<const int> parents,
                 std::uint64_t seed, Exec exec) {
  const auto count = static_cast<Eigen::Index>(parents.size());
  Matrix out(prev.rows(), count);
  for_each_index(exec, count, [&](Eigen::Index m) {
    Rng rng(seed, Stream::transition, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(m));
    out.col(m) = model.sample_transition(k, prev.col(parents[static_cast<std::size_t>(m)]), rng);
  });
  return out;
}

Vector measurement_loglik(const StateSpaceModel& model, int k, const Vector& y, const Matrix& particles, Exec exec) {
  Vector out(particles.cols());
  for_each_index(exec, particles.cols(),
                 [&](Eigen::Index m) { out[m] = model.measurement_logpdf(k, y, particles.col(m)); });
  return out;
}

void gaussian_transition_terms(const Matrix& means, const Matrix& whitener, const Vector& x, Vector& out,
                               Matrix* grad, Exec exec) {
  const Eigen::Index p = means.rows();
  const Eigen::Index count = means.cols();
  if (p > kMaxStateDim) throw std::invalid_argument("gaussian_transition_terms: state dimension above 16");
  out.resize(count);
  if (grad) grad->resize(p, count);
  for_each_index(exec, count, [&](Eigen::Index m) {
    // Small fixed loops: no temporaries, identical arithmetic on every path.
    double z[kMaxStateDim];
    double r[kMaxStateDim];
    for (Eigen::Index i = 0; i < p; ++i) r[i] = x[i] - means(i, m);
    double quad = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j) s += whitener(i, j) * r[j];
      z[i] = s;
      quad += s * s;
    }
    out[m] = -0.5 * quad;
    if (grad) {
      for (Eigen::Index j = 0; j < p; ++j) {
        double s = 0.0;
        for (Eigen::Index i = j; i < p; ++i) s += whitener(i, j) * z[i];
        (*grad)(j, m) = -s;
      }
    }
  });
}

void generic_transition_terms(const StateSpaceModel& model, int k, const Vector& x, const Matrix& atoms,
                              Vector& out, Matrix* grad, Exec exec) {
  out.resize(atoms.cols());
  if (grad) grad->resize(atoms.rows(), atoms.cols());
  for_each_index(exec, atoms.cols(), [&](Eigen::Index m) {
    const Vector atom = atoms.col(m);
    out[m] = model.transition_logpdf(k, x, atom);
    if (grad) grad->col(m) = model.d_trans_out(k, x, atom);
  });
}

Vector weighted_mean(const Vector& weights, const Matrix& columns) {
  Vector mean = Vector::Zero(columns.rows());
  for (Eigen::Index m = 0; m < columns.cols(); ++m) mean.noalias() += weights[m] * columns.col(m);
  return mean;
}

Matrix weighted_covariance(const Vector& weights, const Matrix& columns, const Vector& mean) {
  const Eigen::Index p = columns.rows();
  Matrix cov = Matrix::Zero(p, p);
  Vector d(p);
  for (Eigen::Index m = 0; m < columns.cols(); ++m) {
    d = columns.col(m) - mean;
    cov.noalias() += weights[m] * d * d.transpose();
  }
  return symmetrize(cov);
}

} // namespace mlsmooth::kernels

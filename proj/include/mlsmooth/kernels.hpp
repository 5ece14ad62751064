// Per-particle kernels. Every kernel has a serial reference path and an
// OpenMP path selected by Exec. Per-element work is independent and
// reductions are never split across threads, so both paths produce
// bit-identical output for any thread count.

#ifndef MLSMOOTH_KERNELS_HPP
#define MLSMOOTH_KERNELS_HPP

#include "mlsmooth/model.hpp"

#include <cstdint>
#include <span>

namespace mlsmooth {

enum class Exec { serial, parallel };

namespace kernels {

/// count draws from the prior, one counter stream per particle.
Matrix sample_initial(const StateSpaceModel& model, int count, std::uint64_t seed, Exec exec);

/// Column m is a draw from f(. | prev.col(parents[m])) at step k.
Matrix propagate(const StateSpaceModel& model, int k, const Matrix& prev, std::span<const int> parents,
                 std::uint64_t seed, Exec exec);

/// log f(y | particles.col(m)) for every particle.
Vector measurement_loglik(const StateSpaceModel& model, int k, const Vector& y, const Matrix& particles, Exec exec);

/// Gaussian transition terms against precomputed means: out[m] = -|W (x - means_m)|^2 / 2
/// (normalizing constant dropped) and, if grad is non-null, grad.col(m) = -W^T W (x - means_m).
void gaussian_transition_terms(const Matrix& means, const Matrix& whitener, const Vector& x, Vector& out,
                               Matrix* grad, Exec exec);

/// Same quantities through the generic model interface (full log-density).
void generic_transition_terms(const StateSpaceModel& model, int k, const Vector& x, const Matrix& atoms,
                              Vector& out, Matrix* grad, Exec exec);

/// sum_m w_m columns_m, fixed summation order.
Vector weighted_mean(const Vector& weights, const Matrix& columns);

/// sum_m w_m (c_m - mean)(c_m - mean)^T, fixed summation order, symmetrized.
Matrix weighted_covariance(const Vector& weights, const Matrix& columns, const Vector& mean);

} // namespace kernels
} // namespace mlsmooth

#endif // MLSMOOTH_KERNELS_HPP

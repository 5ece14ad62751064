// Numerical certificates for the identities the smoother relies on. Each
// check returns its measured value next to the tolerance it was held to.
//
// Monte Carlo checks estimate their own standard error from independent
// replicate runs, so reducing the particle count widens the band
// automatically (3 standard errors unless stated otherwise).

#ifndef MLSMOOTH_ORACLES_HPP
#define MLSMOOTH_ORACLES_HPP

#include "mlsmooth/kalman.hpp"
#include "mlsmooth/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mlsmooth {

struct OracleCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  int failures() const;
  bool all_passed() const { return failures() == 0; }
};

struct OracleConfig {
  std::uint64_t seed = 7;
  int particles = 20000;     // particle count of the SMC-vs-closed-form checks
  int trajectories = 2000;   // simulated trajectories for score moment checks
  int runs = 10;             // independent runs used to estimate MC standard errors
};

/// Worst error of the analytic d_* and h_* against finite differences of the
/// log-densities over random points, relative to max(1, |reference|).
OracleCheck check_model_derivatives(const StateSpaceModel& model, std::uint64_t seed, int points = 20,
                                    double tol = 1e-4);

/// Scalar linear model: the mean of the exact score at the true (x_k, x_{k+1})
/// over simulated trajectories, in standard errors (max over k).
OracleCheck check_zero_mean_score(int trajectories, std::uint64_t seed, double tol_se = 4.0);

/// Scalar linear model: sample covariance of the joint (x_k, x_{k+1}) score
/// against the assembled 2x2 block information, worst relative error over k.
OracleCheck check_information_identity(int trajectories, std::uint64_t seed, double tol = 0.10);

/// J^z - J^xi positive semidefinite at sampled points, exact linear and SMC.
OracleCheck check_information_ordering(std::uint64_t seed, int particles = 500);

/// Exact linear J^xi against the negative finite-difference Hessian of the
/// incomplete loglikelihood.
OracleCheck check_louis_linear(double tol = 1e-5);

/// SMC J^xi against the negative finite-difference Jacobian of smc_score.
OracleCheck check_louis_smc(const StateSpaceModel& model, std::uint64_t seed, int particles = 500, double tol = 1e-3);

/// Woodbury reductions and F_k Sigma_{k|k-1} = P_{k|k-1} - Q_k on the three-state system.
OracleCheck check_kalman_identities(std::uint64_t seed, double tol = 1e-10);

/// P_{k|k} < P_{k|k-1} and Sigma^s_{k|n} < P_{k|k} (PSD order) on the three-state system.
OracleCheck check_covariance_ordering(std::uint64_t seed);

/// Score-root smoothing with exact blocks reproduces RTS means and covariances.
OracleCheck check_rts_equivalence(std::uint64_t seed, double tol = 1e-9);

/// Particle filtered means against the Kalman filter (standardized errors).
OracleCheck check_particle_filter(std::uint64_t seed, int particles, int runs);

/// Backward-kernel conditional mean against its closed form.
OracleCheck check_backward_kernel(std::uint64_t seed, int particles, int runs);

/// smc_score and smc_info_xi against the exact linear score and information.
OracleCheck check_smc_score(std::uint64_t seed, int particles, int runs);

/// log-log slope of the filtered-mean error against M in {500, 2000, 8000}.
OracleCheck check_particle_rate(std::uint64_t seed, int runs);

/// EM-gradient never decreases the exact loglikelihood beyond 1e-12 (20 random starts, every k).
OracleCheck check_em_monotone(std::uint64_t seed, int starts = 20);

/// Newton, EM-gradient and BHHH reach the same root on the linear model.
OracleCheck check_scheme_agreement(std::uint64_t seed, double tol = 1e-6);

/// Smoother MSE no larger than filter MSE over simulated scalar trajectories.
OracleCheck check_smoother_efficiency(std::uint64_t seed, int trajectories = 200);

/// A non-symmetric Q must be rejected at construction.
OracleCheck check_rejects_corrupt_model();

OracleReport run_oracle_suite(const OracleConfig& cfg);

/// Least-squares slope and intercept of y on x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace mlsmooth

#endif // MLSMOOTH_ORACLES_HPP

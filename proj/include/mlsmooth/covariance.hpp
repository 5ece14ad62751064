// Standard errors of the smoothed states: repeated particle/smoother passes
// estimate the expected information blocks, and a backward recursion turns
// them into covariances.

#ifndef MLSMOOTH_COVARIANCE_HPP
#define MLSMOOTH_COVARIANCE_HPP

#include "mlsmooth/smoother.hpp"

#include <cstdint>
#include <vector>

namespace mlsmooth {

/// Sigma_k = I_k^{-1} I_{k,k+1} Sigma_{k+1} I_{k+1,k} I_k^{-1} + I_k^{-1} for
/// k = n-1..0 from Sigma_n = terminal. blocks[k] holds the step-k blocks;
/// the result has blocks.size() + 1 entries. Throws NumericError naming k if
/// a diagonal block is not positive definite.
std::vector<Matrix> covariance_recursion(const std::vector<InfoBlocks>& blocks, const Matrix& terminal);

struct TerminalCovariance {
  Matrix cov;
  bool degenerate = false;  // all weight on one atom or all atoms equal
};

/// Weighted particle covariance at step n.
TerminalCovariance terminal_covariance(const ParticleHistory& ph);
/// P_{n|n}.
Matrix terminal_covariance(const FilterResult& fr);

struct RepeatedSamplingOptions {
  int replicates = 100;
  int particles = 2000;
  IterationConfig iter;
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;  // parallel over replicates
  bool reuse_seed = false;     // every replicate uses `seed` itself (test hook)
};

struct CovEstimate {
  int replicates = 0;
  std::vector<Vector> means;        // replicate-averaged smoothed states, k = 0..n
  std::vector<InfoBlocks> blocks;   // averaged information blocks, k = 0..n-1
  std::vector<Matrix> covs;         // recursed covariances, k = 0..n
  Matrix terminal;
  std::vector<int> effective;       // replicates contributing at each step
  std::vector<char> repaired;       // eigenvalue floor applied to blocks[k].xx
  std::vector<std::vector<Vector>> replicate_means;  // [replicate][k]
  std::vector<char> replicate_failed;                // forward pass or smoother raised

  /// sqrt(diag(covs[k])).
  std::vector<Vector> standard_errors() const;
};

/// N forward passes with derived seeds, each followed by a full backward
/// smoothing pass on the same observations. Blocks are averaged first and then
/// recursed. Throws if fewer than N/2 replicates contribute at any step.
CovEstimate repeated_sampling(const StateSpaceModel& model, const std::vector<Vector>& y,
                              const RepeatedSamplingOptions& opt);

} // namespace mlsmooth

#endif // MLSMOOTH_COVARIANCE_HPP

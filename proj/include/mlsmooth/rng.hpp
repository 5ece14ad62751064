// Counter-based random streams. Every (seed, purpose, step, index) tuple maps
// to its own generator, so draws never depend on evaluation order or thread
// count.

#ifndef MLSMOOTH_RNG_HPP
#define MLSMOOTH_RNG_HPP

#include "mlsmooth/numerics.hpp"

#include <cstdint>
#include <limits>
#include <random>

namespace mlsmooth {

enum class Stream : std::uint64_t {
  initial = 1,
  transition = 2,
  measurement = 3,
  resample = 4,
  replicate = 5,
  simulate = 6,
  oracle = 7,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

/// Key for the substream (seed, purpose, step, index).
std::uint64_t stream_key(std::uint64_t seed, Stream purpose, std::uint64_t step = 0, std::uint64_t index = 0);

/// Derives an independent child seed, e.g. one per Monte Carlo replicate.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Stateless-counter generator satisfying UniformRandomBitGenerator.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) : key_(key) {}
  Rng(std::uint64_t seed, Stream purpose, std::uint64_t step = 0, std::uint64_t index = 0)
      : key_(stream_key(seed, purpose, step, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + mix64(++counter_)); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(*this); }
  Vector normal_vector(Eigen::Index dim);

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace mlsmooth

#endif // MLSMOOTH_RNG_HPP

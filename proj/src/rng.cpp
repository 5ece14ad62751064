#include "mlsmooth/rng.hpp"

namespace mlsmooth {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, Stream purpose, std::uint64_t step, std::uint64_t index) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ static_cast<std::uint64_t>(purpose));
  k = mix64(k ^ (step * 0xd1b54a32d192ed03ULL));
  return mix64(k ^ (index * 0x8cb92ba72f3d8dd7ULL));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return stream_key(seed, Stream::replicate, 0, index);
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

Vector Rng::normal_vector(Eigen::Index dim) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

} // namespace mlsmooth

#pragma once

#include <cstdint>
#include <random>

namespace pixdef {

// Seeded random source with a platform-independent output sequence.
//
// The engine is std::mt19937_64, whose sequence is fixed by the standard.
// The standard distributions are not, so the conversions are done here:
//   uniform_index(n): Lemire's multiply-shift with rejection (unbiased)
//   uniform01():      top 53 bits of one draw scaled by 2^-53, in [0,1)
//   normal():         Box-Muller on two uniform01() draws, cosine branch only
//                     (goes through libm log/cos, so only the integer and
//                     uniform paths are guaranteed bit-exact across platforms)
// Not thread-safe; give each thread its own instance.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double uniform01();
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// SplitMix64 finaliser of (seed, stream). Used to give each image of a batch
// its own independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pixdef

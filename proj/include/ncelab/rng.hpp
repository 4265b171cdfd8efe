#pragma once

#include <cstdint>
#include <random>

namespace ncelab {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `stream` at step `index` of a run seeded with `seed`:
/// mix64(mix64(seed ^ stream * φ) ^ index * φ'), φ and φ' odd 64-bit constants.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Deterministic generator. Wraps mt19937_64 and draws variates with fixed
/// bit-level recipes so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0, unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kTruth = 5;
}  // namespace streams

}  // namespace ncelab

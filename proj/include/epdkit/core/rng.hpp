#pragma once

#include <array>
#include <cstdint>

namespace epd {

// SplitMix64 finalizer applied to (x + golden gamma). Pure function; used for
// seed derivation and to expand a 64-bit seed into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent child seed from a parent seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  return splitmix64(parent ^ splitmix64(tag));
}

// xoshiro256** generator with state seeded from splitmix64. Every random draw
// in the toolkit goes through this class, and the derived distributions below
// are implemented here rather than with <random> so streams are identical on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  // Standard normal via Box-Muller (no cached spare, so each call consumes two draws).
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  // Both Box-Muller outputs from one pair of uniforms; the first equals what
  // normal() would have returned from the same state.
  std::array<double, 2> normal_pair() noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace epd

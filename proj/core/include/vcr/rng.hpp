#pragma once

#include <cstdint>

namespace vcr {

/// Counter-based SplitMix64 stream.
///
/// Draw number k of stream `seed` is mix64(seed + (k + 1) * 0x9E3779B97F4A7C15),
/// where mix64 is the SplitMix64 finalizer (Steele, Lea & Flood 2014). Any
/// draw can be computed independently of the others, so noise fields can be
/// generated per pixel in any order and reproduced by other implementations.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  /// Raw 64-bit draw at an absolute counter position.
  std::uint64_t bits(std::uint64_t counter) const noexcept;
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform(std::uint64_t counter) const noexcept;
  /// Uniform in (0, 1]; safe for log().
  double uniform_open0(std::uint64_t counter) const noexcept;
  /// Standard normal via Box-Muller on counters 2k and 2k+1.
  double normal(std::uint64_t k) const noexcept;
  /// Exp(1) via inversion.
  double exponential(std::uint64_t counter) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

}  // namespace vcr

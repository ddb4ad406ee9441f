#pragma once

#include <cstdint>
#include <random>

namespace aslab {

/// SplitMix64 finaliser: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based seed of stream `index` under `base`. The result depends only
/// on (base, index), never on the order in which streams are consumed.
constexpr std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(base ^ (index * 0x9E3779B97F4A7C15ULL));
}

/// Reproducible random source. Uses only the fully specified mt19937_64 engine
/// and hand-written distributions, so sequences match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 24 random bits.
  float uniform() { return static_cast<float>(engine_() >> 40) * 0x1.0p-24f; }
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p;
  }
  /// Standard normal via Box-Muller (one draw per call; the pair's second half is cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace aslab

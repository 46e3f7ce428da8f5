#pragma once

#include <cmath>
#include <cstdint>

namespace deco {

/// SplitMix64 (Steele/Lea/Flood). Fixed constants, no platform dependence:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)
/// Used everywhere randomness is required, so traces and runs replay exactly.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 significant bits.
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Standard normal via Box-Muller. Draws two uniforms per pair; the spare
  /// is cached so consecutive calls consume the stream deterministically.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

/// Stream for (master seed, worker, iteration). The state depends only on
/// the triple, never on consumption order, so every algorithm variant sees
/// identical gradient noise for the same (worker, iteration) pair.
inline SplitMix64 worker_stream(std::uint64_t master_seed,
                                std::uint64_t worker,
                                std::uint64_t iteration) {
  std::uint64_t s = mix64(master_seed + 0x9E3779B97F4A7C15ULL * (worker + 1));
  s = mix64(s + 0x9E3779B97F4A7C15ULL * (iteration + 1));
  return SplitMix64(s);
}

/// Stream for (master seed, label) used for task construction.
inline SplitMix64 labeled_stream(std::uint64_t master_seed,
                                 std::uint64_t label) {
  return SplitMix64(mix64(master_seed ^ mix64(label)));
}

}  // namespace deco

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gravity {

// SplitMix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed of substream (stream, index) under a master seed. A function of its
// arguments only, so replications can be generated in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept {
  return mix64(mix64(mix64(master) ^ (stream + 0x632be59bd9b4e019ULL)) ^ index);
}

// Random source with platform-independent output: mt19937_64 is fully
// specified by the standard, and the uniform / normal transforms below are
// fixed here rather than left to the library's distributions.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0, 1): 53 random bits, never exactly 0.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) by rejection.
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % bound;
  }

  // Standard normal by the Box-Muller transform; the sine branch is kept for
  // the next call.
  double standard_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Normal with the given mean and variance.
  double normal(double mean, double variance) { return mean + std::sqrt(variance) * standard_normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gravity

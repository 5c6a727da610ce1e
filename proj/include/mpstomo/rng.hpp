#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mpstomo {

// Bit-reproducible random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// uniform and normal transforms are spelled out here:
//   uniform01: top 53 bits of one engine word, scaled by 2^-53
//   normal:    Box-Muller on two uniform01 draws, both outputs used in order
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for a tagged sub-task: mix64 chained over master and each key.
template <typename... Keys>
std::uint64_t derive_seed(std::uint64_t master, Keys... keys) {
  std::uint64_t s = mix64(master);
  ((s = mix64(s ^ static_cast<std::uint64_t>(keys))), ...);
  return s;
}

}  // namespace mpstomo

#pragma once

// Portable seeded randomness. std::mt19937_64 output is fixed by the
// standard; the conversions to doubles and bits below are done by hand so
// no library-specific distribution enters a transcript.

#include <cstdint>
#include <random>

namespace svamp {

/// splitmix64 finalizer; a 64-bit avalanche mix.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` derived from `master`. Trials, devices and sources
/// each get their own stream: derive_seed(derive_seed(master, trial), role).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

enum class StreamRole : std::uint64_t { kDevice = 1, kSource = 2, kAuxiliary = 3 };

inline constexpr std::uint64_t derive_seed(std::uint64_t master, StreamRole role) {
  return derive_seed(master, static_cast<std::uint64_t>(role));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// 1 with probability p.
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  /// Uniform integer in [0, n) by rejection (n > 0).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace svamp

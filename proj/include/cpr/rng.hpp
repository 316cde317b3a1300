#pragma once

#include <cstdint>

namespace cpr {

/// Purpose tags keep the streams for different random quantities disjoint.
enum class Stream : std::uint64_t {
  kGroundTruth = 1,    // benchmark vectors / signals
  kInitialPhases = 2,  // GS starting phases
  kBeta = 3,           // resampling offsets
};

/// Counter-based generator: draw i of stream (seed, purpose, a, b) is
/// mix(key ^ mix(i)), so any draw can be reproduced without replaying the
/// sequence and independent streams need no shared state. The mixer is the
/// SplitMix64 finalizer.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream purpose, std::uint64_t a = 0, std::uint64_t b = 0)
      : key_(derive_key(seed, static_cast<std::uint64_t>(purpose), a, b)) {}

  std::uint64_t next() { return at(counter_++); }

  std::uint64_t at(std::uint64_t counter) const {
    return mix(key_ + mix(counter + 0x9e3779b97f4a7c15ULL));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t purpose,
                                            std::uint64_t a, std::uint64_t b) {
    std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
    k = mix(k ^ (purpose * 0x9e3779b97f4a7c15ULL));
    k = mix(k ^ (a + 0xbb67ae8584caa73bULL));
    k = mix(k ^ (b + 0x3c6ef372fe94f82bULL));
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cpr

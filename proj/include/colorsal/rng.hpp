#pragma once

#include <cstdint>

namespace colorsal {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-addressed random stream: the draws for sample `index` of a run
// seeded with `seed` depend only on (seed, index), never on batching or on
// which worker produced them.
//
//   state_0   = mix64(seed + 0x9E3779B97F4A7C15 * (index + 1))
//   state_t+1 = state_t + 0x9E3779B97F4A7C15
//   draw_t    = mix64(state_t+1)
//
// i.e. a SplitMix64 generator whose starting state is itself hashed from the
// (seed, index) pair.
class SampleStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  SampleStream(std::uint64_t seed, std::uint64_t index)
      : state_(mix64(seed + kGamma * (index + 1))) {}

  std::uint64_t next() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1 (Lemire's multiply-shift, unbiased).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next();
      const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace colorsal

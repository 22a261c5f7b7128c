#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace thermint {

// One SplitMix64 round. Used both as a seed scrambler and as the documented
// stream-splitting function for parallel Monte-Carlo blocks.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stream seed for (master seed, stream index). Two scrambling rounds over the
// golden-ratio-spaced combination keep nearby indices statistically unrelated.
// This is the only splitting scheme used anywhere; results are reproducible
// bit-for-bit for a fixed master seed regardless of how streams are scheduled.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  return splitmix64(splitmix64(z));
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t index) {
  return std::mt19937_64(stream_seed(master, index));
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Marsaglia polar Gaussian sampler. Explicit rather than
// std::normal_distribution so the draw sequence for a given seed is fixed by
// this file, not by the standard library implementation.
class GaussianSampler {
 public:
  double operator()(std::mt19937_64& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01(rng) - 1.0;
      v = 2.0 * uniform01(rng) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  void reset() { has_spare_ = false; }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace thermint

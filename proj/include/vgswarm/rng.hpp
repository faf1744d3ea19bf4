#pragma once

// Seeded random streams. std::mt19937_64 output is fully specified by the
// standard; the distributions in <random> are not, so uniform and normal
// variates are derived here to keep logs byte-identical across toolchains.

#include <cmath>
#include <cstdint>
#include <random>

namespace vgswarm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and stream labels.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t salt = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ (salt * 0xD1B54A32D192ED03ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

  // Box-Muller; caches the second variate.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * 3.14159265358979323846 * u2);
    has_spare_ = true;
    return mean + stddev * mag * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t next_u64() { return engine_(); }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vgswarm

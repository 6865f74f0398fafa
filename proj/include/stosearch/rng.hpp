#pragma once

// Deterministic, substream-keyed random variate generation.
//
// Every stochastic routine in the library takes an explicit RandomStream.
// A stream is fully determined by a 64-bit seed plus up to three stream
// keys, so replicate b of experiment rep r reproduces bit-identically on
// any platform (mt19937_64 is standard-specified; all variate transforms
// below are implemented here rather than via std:: distributions, whose
// output is implementation-defined).

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace stosearch {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derive a child seed; used to nest more than three key levels.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(seed ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t k1 = 0,
                        std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x8E9C4D1F0AF7B362ULL);
    h = splitmix64(h ^ splitmix64(k1 + 0x1B873593C2B2AE35ULL));
    h = splitmix64(h ^ splitmix64(k2 + 0x6C62272E07BB0142ULL));
    h = splitmix64(h ^ splitmix64(k3 + 0x27D4EB2F165667C5ULL));
    engine_.seed(h);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1], safe as a log argument.
  double u01_open() { return 1.0 - u01(); }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(u01_open()));
    const double t = 6.283185307179586476925286766559 * u01();
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

  // Exponential(1).
  double exponential() { return -std::log(u01_open()); }

  // Gumbel(0, 1), cdf exp(-exp(-x)).
  double gumbel() {
    double u;
    do {
      u = u01();
    } while (u <= 0.0);
    return -std::log(-std::log(u));
  }

  double chi_square(int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
      const double z = normal();
      s += z * z;
    }
    return s;
  }

  // Uniform integer in [0, n), rejection sampled (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace stosearch

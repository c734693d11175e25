#pragma once

// xoshiro256++ with splitmix64 seeding. Self-contained so that runs are
// reproducible across compilers and standard libraries; <random> distributions
// are implementation-defined and would break byte-for-byte determinism.
//
// Parallel work items take independent streams via Rng::stream(root, index);
// results must then not depend on the execution schedule.

#include <cstdint>
#include <cmath>

#include "ellab/linalg.hpp"

namespace ellab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Independent substream `index` of a root seed.
  static Rng stream(std::uint64_t root, std::uint64_t index) {
    std::uint64_t sm = root;
    std::uint64_t a = splitmix64(sm);
    sm ^= 0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL;
    return Rng(a ^ splitmix64(sm));
  }

  std::uint64_t next() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Marsaglia's polar method.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline Vec gaussian_vec(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

inline Vec sphere_point(int n, Rng& rng) {
  for (;;) {
    Vec g = gaussian_vec(n, rng);
    double nn = g.norm();
    if (nn > 1e-12) return g * (1.0 / nn);
  }
}

// Uniform on the open unit ball: direction times U^{1/n}.
inline Vec ball_point(int n, Rng& rng) {
  double radius = std::pow(rng.uniform(), 1.0 / n);
  return sphere_point(n, rng) * radius;
}

}  // namespace ellab

// SPDX-License-Identifier: Apache-2.0

#ifndef TENSORCHART_RNG_HPP
#define TENSORCHART_RNG_HPP

#include <complex>
#include <cmath>
#include <cstdint>
#include <random>

namespace tensorchart {

// splitmix64 mixing step, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seeded generator with explicit value mappings. The standard library
// distributions are implementation-defined, so uniform and normal draws are
// mapped by hand to keep artifacts reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix_seed(seed)), base_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Circularly symmetric complex normal with unit total variance.
  std::complex<double> circular_normal() {
    const double re = normal();
    const double im = normal();
    return {re * 0.70710678118654752440, im * 0.70710678118654752440};
  }

  // Derives an independent generator for a named substream.
  Rng fork(std::uint64_t stream) const {
    return Rng(mix_seed(base_ ^ mix_seed(stream + 1)));
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t base_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tensorchart

#endif

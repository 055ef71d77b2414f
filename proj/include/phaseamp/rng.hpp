// Seeded randomness helpers: a splitmix64 stream-splitter for deriving
// independent per-trial seeds from a master seed, and Gaussian sampling in
// the convention used throughout: a complex Gaussian of variance v has
// independent real and imaginary parts each of variance v/2.

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace phaseamp {

// splitmix64: bijective 64-bit mixer.  derive_seed(master, k) gives the
// k-th derived stream seed; distinct (master, k) pairs give independent
// mt19937_64 seedings for embarrassingly parallel trials.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double gaussian(double variance) {
    return std::sqrt(variance) * normal_(gen_);
  }

  std::complex<double> complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = s * normal_(gen_);
    const double im = s * normal_(gen_);
    return {re, im};
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }

  std::uint64_t next_u64() { return gen_(); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace phaseamp

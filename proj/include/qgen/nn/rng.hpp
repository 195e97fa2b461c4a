#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qgen/common.hpp"

namespace qgen::nn {

// Deterministic RNG: mt19937_64 (algorithm fixed by the standard) with
// hand-rolled distributions, so identical seeds give identical draws on every
// platform. The std:: distribution classes are implementation-defined and
// never used.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : seed_(seed), eng_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes exactly two draws per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw NumericError("rng: below(0)");
    return u64() % n;
  }

  // Index drawn from an unnormalized nonnegative weight vector.
  int categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw NumericError("rng: categorical with non-positive mass");
    double r = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (size_t i = xs.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

  // Derive an independent child stream; used to give each (epoch, example)
  // its own deterministic stream regardless of thread scheduling.
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  Rng child(uint64_t tag) const { return Rng(mix(seed_, tag)); }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace qgen::nn

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mtsic {

// Deterministic random source. Every stochastic choice in the library (weight
// init, scene synthesis, patch sampling, augmentation) draws from one of
// these, so a fixed seed reproduces a run bit-for-bit on a given build. Only
// the raw mt19937_64 engine is used; the value transforms live here so they
// cannot drift with the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return (gen_() >> 11) * (1.0 / 9007199254740992.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n > 0
  int uniform_int(int n) { return (int)(gen_() % (uint64_t)n); }

  // standard normal via Box-Muller (polar form), spare value cached
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // derived generator for an indexed substream (scene index, layer index, ...)
  Rng split(uint64_t stream) const {
    std::mt19937_64 g = gen_;
    uint64_t base = g();
    return Rng(base ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mtsic

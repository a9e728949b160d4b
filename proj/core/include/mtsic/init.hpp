#pragma once

#include <cmath>

#include "mtsic/rng.hpp"
#include "mtsic/tensor.hpp"

namespace mtsic {

template <typename S>
void fill_uniform(Tensor<S>& t, Rng& rng, double lo, double hi) {
  S* d = t.data();
  const int64_t n = t.size();
  for (int64_t i = 0; i < n; ++i) d[i] = S(rng.uniform(lo, hi));
}

template <typename S>
void fill_gaussian(Tensor<S>& t, Rng& rng, double stddev) {
  S* d = t.data();
  const int64_t n = t.size();
  for (int64_t i = 0; i < n; ++i) d[i] = S(stddev * rng.gaussian());
}

// fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in))
template <typename S>
void init_fan_in(Tensor<S>& t, Rng& rng, int64_t fan_in) {
  const double b = 1.0 / std::sqrt((double)(fan_in > 0 ? fan_in : 1));
  fill_uniform(t, rng, -b, b);
}

}  // namespace mtsic

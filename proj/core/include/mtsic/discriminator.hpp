#pragma once

#include <string>
#include <vector>

#include "mtsic/layers.hpp"

// Statistics-based multi-scale conditional discriminator. Each scale reduces
// the conditioned pair, adapts it with two convs, and scores the per-channel
// spatial mean / max / standard deviation through small MLPs, yielding
// M x 3 scalar logits that are invariant to spatial permutations of the
// adapted features.

namespace mtsic {

template <typename S>
struct DiscScale {
  ConvLayer<S> down;            // 4x4 stride 2
  ConvLayer<S> adapt1, adapt2;  // 3x3 stride 1
  Mlp<S> heads[3];              // mean, max, stddev -> scalar
};

template <typename S>
struct DiscParams {
  int bands = 0, base = 0;
  ConvLayer<S> initial;  // (3 + L) -> base, 4x4 stride 2
  std::vector<DiscScale<S>> scales;
};

template <typename S>
struct DiscOutput {
  std::vector<Tensor<S>> scores;    // M*3 logits {1}, scale-major, mean/max/std
  std::vector<Tensor<S>> features;  // adaptation activations, one per scale
  int scale_count = 0;
};

template <typename S>
DiscParams<S> make_discriminator(ParamSet<S>& ps, int bands, int base, int scales, Rng& rng);

// x {3,H,W} conditioned on cube {L,H,W}
template <typename S>
DiscOutput<S> disc_forward(const Tensor<S>& x, const Tensor<S>& cube, const DiscParams<S>& p,
                           GradTape<S>* tape = nullptr);

// shares storage but drops the gradient requirement on every weight, so a
// pass through the copy treats the discriminator as a fixed feature extractor
template <typename S>
DiscParams<S> disc_detached(const DiscParams<S>& p);

}  // namespace mtsic

#pragma once

#include <cstdint>
#include <vector>

#include "mtsic/tensor.hpp"

// Synthetic multiband scenes with a learnable band->color ground truth.
// Each scene is a handful of shapes over a background; every shape carries a
// material whose spectrum is a Gaussian bump over the bands and whose
// reference color is keyed injectively to the bump center, so recovering the
// color from the spectrum is well-posed.

namespace mtsic {

struct MaterialSignature {
  std::vector<float> spectrum;  // nonnegative response per band
  float color[3];               // paired reference color in [0,1]
};

struct SceneSpec {
  uint64_t seed = 0;
  int bands = 8;
  int h = 64, w = 64;
  int shapes = 0;        // 0 draws a count in [3,8] from the seed
  float noise = 0.01f;   // spectral noise sigma; the rgb target stays clean
};

struct ScenePair {
  Tensor<float> cube;  // {L,H,W}
  Tensor<float> rgb;   // {3,H,W} in [0,1]
};

// fixed deterministic palette: distinct bump centers spread over the bands,
// hues keyed to center/bands (injective over the palette)
std::vector<MaterialSignature> make_palette(int bands, int count = 8);

ScenePair synth_scene(const SceneSpec& spec);

}  // namespace mtsic

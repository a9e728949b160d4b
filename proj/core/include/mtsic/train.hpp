#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mtsic/config.hpp"
#include "mtsic/generator.hpp"
#include "mtsic/objectives.hpp"

// Training loop: alternating discriminator / generator Adam steps over
// augmented patches streamed from a producer thread. Fully seeded — the
// patch schedule, augmentation draws, and parameter updates are fixed by
// (seed, config, data) regardless of queue timing.

namespace mtsic {

// one scene held in memory; rgb is premapped to the [-1,1] training range,
// the cube keeps its stored [0,1] range
template <typename S>
struct SceneData {
  Tensor<S> cube;  // {L,H,W}
  Tensor<S> rgb;   // {3,H,W}
};

template <typename S>
std::vector<SceneData<S>> load_scenes(const std::string& dir);

// quarter-turn rotation used by augmentation (no tape involvement)
template <typename S>
Tensor<S> rot90(const Tensor<S>& chw, int quarter_turns);

// patches along one axis: floor((extent - crop) / stride) + 1
int patch_grid_count(int extent, int crop, int stride);

template <typename S>
struct PatchPair {
  Tensor<S> cube, rgb;  // {L,crop,crop} and {3,crop,crop}
};

// the augmented patch for grid slot (gi, gj): draws scale, row jitter,
// column jitter, and rotation from rng in that order, then applies the same
// resize / crop / rotate geometry to cube and rgb
template <typename S>
PatchPair<S> sample_patch(const SceneData<S>& scene, int gi, int gj, int crop, int stride,
                          Rng& rng);

template <typename S>
struct Adam {
  S beta1, beta2;
  S eps = S(1e-8);
  long long step_count = 0;
  std::vector<std::vector<S>> m, v;  // first and second moments per item

  Adam(S b1, S b2) : beta1(b1), beta2(b2) {}
  void step(ParamSet<S>& ps, S lr);
};

template <typename S>
struct TrainResult {
  std::vector<LossReport<S>> reports;  // generator-side terms per iteration
  std::vector<S> d_trace;              // discriminator loss per iteration
  std::string final_checkpoint;
  std::string log_path;
};

// trains from the scenes in data_dir, writing epoch checkpoints, final.mtck,
// and train.log under out_dir; echo_log additionally receives every log
// record when non-null. Aborts with a diagnostic naming the first non-finite
// loss term.
template <typename S>
TrainResult<S> train(const TrainConfig& cfg, const std::string& data_dir,
                     const std::string& out_dir, std::ostream* echo_log = nullptr);

}  // namespace mtsic

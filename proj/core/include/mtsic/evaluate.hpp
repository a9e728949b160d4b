#pragma once

#include <string>
#include <vector>

#include "mtsic/generator.hpp"
#include "mtsic/metrics.hpp"
#include "mtsic/train.hpp"

// Evaluation runner: colorizes every held-out scene with a trained
// generator, maps the [-1,1] outputs back to [0,1], and scores them with the
// color-quality metrics. Scenes are scored independently, so evaluation
// parallelizes across images.

namespace mtsic {

// rebuilds the generator described by a checkpoint and fills its parameters
// (and running statistics) from the stored tensors
template <typename S>
MtsicParams<S> load_generator(const std::string& checkpoint_path, ParamSet<S>& ps);

// cube {L,H,W} -> rgb {3,H,W} clamped to [0,1], eval mode
template <typename S>
Tensor<S> colorize_cube(const Tensor<S>& cube, MtsicParams<S>& gen);

// one metric row per scene plus the aggregate mean row
template <typename S>
MetricReport evaluate_pairs(MtsicParams<S>& gen, const std::vector<SceneData<S>>& scenes,
                            int threads = 1);

template <typename S>
MetricReport evaluate_dir(const std::string& checkpoint_path, const std::string& data_dir,
                          int threads = 1);

// one text record per row plus the aggregate, full precision
std::string format_report(const MetricReport& report);

}  // namespace mtsic

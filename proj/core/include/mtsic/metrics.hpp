#pragma once

#include <vector>

#include "mtsic/tensor.hpp"

// Color-quality evaluation metrics. All metrics are plain forward
// computations in double precision; images are {3,H,W} (or {C,H,W} where
// noted) on the [0,1] range unless a range parameter says otherwise.

namespace mtsic {

// 10 log10(R^2 / MSE); identical images return +infinity
template <typename S>
double psnr(const Tensor<S>& gen, const Tensor<S>& gt, double range);

// mean SSIM over 11x11 Gaussian windows (sigma 1.5) on the given range
template <typename S>
double ssim_metric(const Tensor<S>& gen, const Tensor<S>& gt, double range = 1.0);

// universal image quality index over sliding windows (stride 1), averaged
// across windows and channels; degenerate windows take the eps-guarded limit
template <typename S>
double uiqi(const Tensor<S>& gen, const Tensor<S>& gt, int window = 8);

// opponent-color colorfulness on [0,1] channels
template <typename S>
double colorful(const Tensor<S>& img);

struct ColorHistogram {
  int bins = 0;
  std::vector<double> p;  // joint bins^3 cells, smoothed and normalized
};

template <typename S>
ColorHistogram color_histogram(const Tensor<S>& img, int bins = 16);

// Jensen-Shannon divergence with base-2 logs, bounded in [0,1]
double colorjsd(const std::vector<double>& p, const std::vector<double>& q);
double colorjsd(const ColorHistogram& p, const ColorHistogram& q);

struct MetricRow {
  double psnr = 0, ssim = 0, uiqi = 0, colorful = 0, colorjsd = 0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricRow aggregate;
};

// all metrics for one [0,1] pair; colorful is measured on the generated image
template <typename S>
MetricRow metric_row(const Tensor<S>& gen, const Tensor<S>& gt);

MetricRow aggregate_rows(const std::vector<MetricRow>& rows);

}  // namespace mtsic

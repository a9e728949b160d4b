#include "mtsic/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "test_util.hpp"

using namespace mtsic;
using namespace mtsic_test;

TEST(Psnr, ClosedForms) {
  Tensor<double> gt = Tensor<double>::full({3, 4, 4}, 100.0);
  Tensor<double> off1 = Tensor<double>::full({3, 4, 4}, 101.0);
  Tensor<double> off2 = Tensor<double>::full({3, 4, 4}, 102.0);
  EXPECT_NEAR(psnr(off1, gt, 255.0), 20.0 * std::log10(255.0), 1e-12);
  EXPECT_NEAR(psnr(off1, gt, 255.0), 48.130803608679, 1e-9);
  EXPECT_NEAR(psnr(off2, gt, 255.0), 42.110203695399, 1e-9);
  EXPECT_TRUE(std::isinf(psnr(gt, gt, 255.0)));
  EXPECT_GT(psnr(gt, gt, 255.0), 0.0);
}

TEST(Psnr, RejectsMismatchedShapes) {
  Tensor<double> a({3, 4, 4});
  Tensor<double> b({3, 4, 5});
  EXPECT_THROW(psnr(a, b, 1.0), std::invalid_argument);
}

TEST(SsimMetric, IdenticalImagesScoreOne) {
  Rng rng(901);
  Tensor<double> a = random_tensor<double>({3, 12, 12}, rng, 0.0, 1.0);
  EXPECT_NEAR(ssim_metric(a, a, 1.0), 1.0, 1e-12);
}

TEST(Uiqi, IdenticalImagesScoreOne) {
  Rng rng(902);
  Tensor<double> a = random_tensor<double>({2, 10, 10}, rng, 0.2, 1.0);
  EXPECT_NEAR(uiqi(a, a), 1.0, 1e-9);
}

TEST(Uiqi, DoubledImageScoresSixteenTwentyFifths) {
  // mu_y = 2 mu_x, var_y = 4 var_x, cov = 2 var_x in every window, so each
  // window quality is 16 sigma^2 mu^2 / (5 sigma^2 * 5 mu^2) = 0.64
  Rng rng(903);
  Tensor<double> a = random_tensor<double>({2, 10, 10}, rng, 0.2, 1.0);
  Tensor<double> b = a.clone();
  for (int64_t i = 0; i < b.size(); ++i) b.data()[i] *= 2.0;
  EXPECT_NEAR(uiqi(a, b), 0.64, 1e-9);
}

TEST(Uiqi, RejectsOversizedWindow) {
  Tensor<double> a({1, 6, 6});
  EXPECT_THROW(uiqi(a, a, 8), std::invalid_argument);
}

TEST(Colorful, ClosedForms) {
  Tensor<double> gray = Tensor<double>::full({3, 5, 5}, 0.42);
  EXPECT_EQ(colorful(gray), 0.0);

  Tensor<double> red({3, 5, 5});
  for (int i = 0; i < 25; ++i) {
    red.data()[i] = 1.0;
    red.data()[25 + i] = 0.0;
    red.data()[50 + i] = 0.0;
  }
  EXPECT_NEAR(colorful(red), 0.3 * std::sqrt(1.25), 1e-12);
  EXPECT_NEAR(colorful(red), 0.335410196625, 1e-9);
}

TEST(ColorHistogram, CountsJointBins) {
  Tensor<double> img({3, 1, 2});
  img.data()[0] = 0.1;  // r of pixel 0
  img.data()[1] = 0.7;  // r of pixel 1
  img.data()[2] = 0.6;  // g of pixel 0
  img.data()[3] = 0.2;  // g of pixel 1
  img.data()[4] = 0.9;  // b of pixel 0
  img.data()[5] = 0.4;  // b of pixel 1
  ColorHistogram h = color_histogram(img, 2);
  ASSERT_EQ(h.bins, 2);
  ASSERT_EQ(h.p.size(), 8u);
  // pixel 0 -> (0,1,1) = cell 3, pixel 1 -> (1,0,0) = cell 4
  EXPECT_NEAR(h.p[3], 0.5, 1e-9);
  EXPECT_NEAR(h.p[4], 0.5, 1e-9);
  double rest = 0;
  for (size_t i = 0; i < h.p.size(); ++i)
    if (i != 3 && i != 4) rest += h.p[i];
  EXPECT_LT(rest, 1e-9);
  double total = 0;
  for (double v : h.p) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(ColorHistogram, ClampsOutOfRangeValues) {
  Tensor<double> img({3, 1, 1});
  img.data()[0] = -0.3;
  img.data()[1] = 1.7;
  img.data()[2] = 0.5;
  ColorHistogram h = color_histogram(img, 4);
  // (-0.3, 1.7, 0.5) clamps to bins (0, 3, 2)
  EXPECT_NEAR(h.p[(0 * 4 + 3) * 4 + 2], 1.0, 1e-9);
}

TEST(ColorJsd, ClosedForms) {
  EXPECT_EQ(colorjsd(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}), 0.0);
  EXPECT_NEAR(colorjsd(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}), 1.0, 1e-12);
  EXPECT_NEAR(colorjsd(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}),
              0.311278124459, 1e-9);
}

TEST(ColorJsd, SymmetricAndBounded) {
  Rng rng(904);
  Tensor<double> a = random_tensor<double>({3, 6, 6}, rng, 0.0, 1.0);
  Tensor<double> b = random_tensor<double>({3, 6, 6}, rng, 0.0, 1.0);
  ColorHistogram ha = color_histogram(a);
  ColorHistogram hb = color_histogram(b);
  double ab = colorjsd(ha, hb);
  EXPECT_NEAR(ab, colorjsd(hb, ha), 1e-14);
  EXPECT_GT(ab, 0.0);
  EXPECT_LE(ab, 1.0);
}

TEST(ColorJsd, RejectsMismatchedInputs) {
  EXPECT_THROW(colorjsd(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}),
               std::invalid_argument);
  ColorHistogram p, q;
  p.bins = 8;
  q.bins = 16;
  EXPECT_THROW(colorjsd(p, q), std::invalid_argument);
}

TEST(MetricRow, SelfComparisonHitsSentinels) {
  Rng rng(905);
  Tensor<double> img = random_tensor<double>({3, 12, 12}, rng, 0.0, 1.0);
  MetricRow row = metric_row(img, img);
  EXPECT_TRUE(std::isinf(row.psnr));
  EXPECT_NEAR(row.ssim, 1.0, 1e-12);
  EXPECT_NEAR(row.uiqi, 1.0, 1e-9);
  EXPECT_NEAR(row.colorjsd, 0.0, 1e-12);
  EXPECT_GT(row.colorful, 0.0);
}

TEST(MetricRow, AggregateIsElementwiseMean) {
  MetricRow a, b;
  a.psnr = 30.0;
  a.ssim = 0.8;
  a.uiqi = 0.6;
  a.colorful = 0.2;
  a.colorjsd = 0.1;
  b.psnr = 40.0;
  b.ssim = 1.0;
  b.uiqi = 0.8;
  b.colorful = 0.4;
  b.colorjsd = 0.3;
  MetricRow agg = aggregate_rows({a, b});
  EXPECT_NEAR(agg.psnr, 35.0, 1e-12);
  EXPECT_NEAR(agg.ssim, 0.9, 1e-12);
  EXPECT_NEAR(agg.uiqi, 0.7, 1e-12);
  EXPECT_NEAR(agg.colorful, 0.3, 1e-12);
  EXPECT_NEAR(agg.colorjsd, 0.2, 1e-12);
  MetricRow empty = aggregate_rows({});
  EXPECT_EQ(empty.psnr, 0.0);
}

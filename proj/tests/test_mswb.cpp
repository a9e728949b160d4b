#include "mtsic/mswb.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mtsic/gradcheck.hpp"
#include "test_util.hpp"

using namespace mtsic;
using namespace mtsic_test;

TEST(Cbam, ZeroParametersQuarterTheInput) {
  ParamSet<float> ps;
  Rng rng(501);
  auto p = make_cbam(ps, "cbam", 8, rng);
  ps.set_all_zero();
  Tensor<float> x = random_tensor<float>({8, 5, 5}, rng);
  Tensor<float> out = cbam(x, p);
  for (int64_t i = 0; i < x.size(); ++i)
    EXPECT_FLOAT_EQ(out.data()[i], 0.25f * x.data()[i]);
}

TEST(Cbam, GatesContract) {
  ParamSet<double> ps;
  Rng rng(502);
  auto p = make_cbam(ps, "cbam", 4, rng);
  Tensor<double> x = random_tensor<double>({4, 6, 6}, rng, 0.1, 1.0);
  Tensor<double> out = cbam(x, p);
  ASSERT_EQ(out.shape(), x.shape());
  // both gates are sigmoids, so the block strictly shrinks magnitudes
  for (int64_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(std::abs(out.data()[i]), std::abs(x.data()[i]));
    EXPECT_GT(out.data()[i] * x.data()[i], 0.0);  // sign preserved
  }
}

TEST(Cbam, GradF64) {
  ParamSet<double> ps;
  Rng rng(503);
  auto p = make_cbam(ps, "cbam", 4, rng);
  Tensor<double> x = random_tensor<double>({4, 4, 4}, rng);
  auto f = [&p](const Tensor<double>& t, GradTape<double>* tape) { return cbam(t, p, tape); };
  EXPECT_LT(grad_check<double>(f, x, kGradEpsF64), kGradTolF64);
  auto loss = [&](GradTape<double>* tape) {
    Tensor<double> o = cbam(x, p, tape);
    return mean_all(mul(o, o, tape), tape);
  };
  EXPECT_LT(grad_check_leaves<double>(loss, ps.trainable(), kGradEpsF64, 4), kGradTolF64);
}

TEST(StripConv, MatchesReferenceAllDirections) {
  Rng rng(511);
  for (StripDir dir : {StripDir::diag45, StripDir::horiz, StripDir::diag135}) {
    Tensor<double> x = random_tensor<double>({2, 7, 9}, rng);
    Tensor<double> k = random_tensor<double>({2, 9}, rng);
    Tensor<double> got = strip_conv2d(x, k, dir);
    Tensor<double> want = ref_strip(x, k, dir);
    expect_all_near(got, want, 1e-12, "strip direction");
  }
}

TEST(StripConv, DeltaKernelShifts) {
  // k with only tap t=+1 set copies the pixel one step along the direction
  Tensor<double> x({1, 5, 5});
  x.at({0, 2, 2}) = 1.0;
  Tensor<double> k({1, 9});
  k.at({0, 5}) = 1.0;  // t = +1
  Tensor<double> out = strip_conv2d(x, k, StripDir::diag45);
  // out[i][j] = x[i - 1][j + 1] => the spike lands at (3, 1)
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      EXPECT_DOUBLE_EQ(out.at({0, i, j}), (i == 3 && j == 1) ? 1.0 : 0.0);
}

TEST(StripConv, InteriorConstantSumsKernel) {
  Tensor<float> x = Tensor<float>::full({1, 11, 11}, 2.0f);
  Rng rng(512);
  Tensor<float> k = random_tensor<float>({1, 9}, rng);
  float ksum = 0;
  for (int t = 0; t < 9; ++t) ksum += k.data()[t];
  Tensor<float> out = strip_conv2d(x, k, StripDir::horiz);
  for (int j = 4; j < 7; ++j) EXPECT_NEAR(out.at({0, 5, j}), 2.0f * ksum, 1e-5);
}

TEST(StripConv, GradF64) {
  Rng rng(513);
  Tensor<double> x = random_tensor<double>({2, 6, 6}, rng);
  Tensor<double> k = random_tensor<double>({2, 9},
                                           rng);
  k.set_requires_grad(true);
  for (StripDir dir : {StripDir::diag45, StripDir::horiz, StripDir::diag135}) {
    auto f = [&k, dir](const Tensor<double>& t, GradTape<double>* tape) {
      return strip_conv2d(t, k, dir, tape);
    };
    EXPECT_LT(grad_check<double>(f, x, kGradEpsF64), kGradTolF64);
    auto loss = [&](GradTape<double>* tape) {
      Tensor<double> o = strip_conv2d(x, k, dir, tape);
    return mean_all(mul(o, o, tape), tape);
    };
    EXPECT_LT(grad_check_leaves<double>(loss, {k}, kGradEpsF64, 6), kGradTolF64);
  }
}

TEST(Sffm, ZeroParametersGiveZero) {
  ParamSet<float> ps;
  Rng rng(521);
  auto p = make_sffm(ps, "sffm", 4, rng);
  ps.set_all_zero();
  Tensor<float> ys = random_tensor<float>({4, 8, 8}, rng);
  Tensor<float> yf = random_tensor<float>({4, 4, 4}, rng);
  Tensor<float> out = sffm(ys, yf, p);
  ASSERT_EQ(out.shape(), yf.shape());
  for (int64_t i = 0; i < out.size(); ++i) EXPECT_FLOAT_EQ(out.data()[i], 0.0f);
}

TEST(Sffm, RejectsMismatchedStreams) {
  ParamSet<float> ps;
  Rng rng(522);
  auto p = make_sffm(ps, "sffm", 4, rng);
  Tensor<float> ys({4, 8, 8});
  Tensor<float> yf({4, 3, 4});
  EXPECT_THROW(sffm(ys, yf, p), std::invalid_argument);
}

TEST(Sffm, MatchesStagedOracle) {
  ParamSet<double> ps;
  Rng rng(523);
  const int dim = 4, h = 4, w = 4;
  auto p = make_sffm(ps, "sffm", dim, rng);
  // block-constant spatial stream so the internal bilinear halving is exact
  Tensor<double> half = random_tensor<double>({dim, h, w}, rng);
  Tensor<double> ys({dim, 2 * h, 2 * w});
  for (int c = 0; c < dim; ++c)
    for (int i = 0; i < 2 * h; ++i)
      for (int j = 0; j < 2 * w; ++j) ys.at({c, i, j}) = half.at({c, i / 2, j / 2});
  Tensor<double> yf = random_tensor<double>({dim, h, w}, rng);

  Tensor<double> got = sffm(ys, yf, p);
  Tensor<double> want = sffm_ref(half, yf, p);
  expect_all_near(got, want, 1e-10, "sffm staged oracle");
}

TEST(Sffm, GradF64) {
  ParamSet<double> ps;
  Rng rng(524);
  auto p = make_sffm(ps, "sffm", 2, rng);
  Tensor<double> ys = random_tensor<double>({2, 8, 8}, rng);
  Tensor<double> yf = random_tensor<double>({2, 4, 4}, rng);
  ys.set_requires_grad(true);
  yf.set_requires_grad(true);
  auto loss = [&](GradTape<double>* tape) {
    Tensor<double> o = sffm(ys, yf, p, tape);
    return mean_all(mul(o, o, tape), tape);
  };
  std::vector<Tensor<double>> leaves = ps.trainable();
  leaves.push_back(ys);
  leaves.push_back(yf);
  EXPECT_LT(grad_check_leaves<double>(loss, leaves, kGradEpsF64, 3), kGradTolF64);
}

TEST(Mswb, ZeroParametersAreExactIdentity) {
  ParamSet<float> ps;
  Rng rng(531);
  auto p = make_mswb(ps, "mswb", 4, rng);
  ps.set_all_zero();
  Tensor<float> y = random_tensor<float>({4, 8, 8}, rng);
  Tensor<float> out = mswb_forward(y, p, false);
  expect_identical(out, y, "zeroed mswb");
}

TEST(Mswb, ShapeAndFiniteness) {
  ParamSet<float> ps;
  Rng rng(532);
  auto p = make_mswb(ps, "mswb", 8, rng);
  Tensor<float> y = random_tensor<float>({8, 16, 12}, rng);
  Tensor<float> out = mswb_forward(y, p, true);
  ASSERT_EQ(out.shape(), y.shape());
  for (int64_t i = 0; i < out.size(); ++i) ASSERT_TRUE(std::isfinite(out.data()[i]));
  Tensor<float> odd({8, 7, 8});
  EXPECT_THROW(mswb_forward(odd, p, false), std::invalid_argument);
}

TEST(Mswb, TrainingUpdatesRunningStats) {
  ParamSet<float> ps;
  Rng rng(533);
  auto p = make_mswb(ps, "mswb", 4, rng);
  Tensor<float>* rm = ps.find("mswb.cbr_global.bn.running_mean");
  ASSERT_NE(rm, nullptr);
  std::vector<float> before(rm->data(), rm->data() + rm->size());
  Tensor<float> y = random_tensor<float>({4, 8, 8}, rng);
  (void)mswb_forward(y, p, true);
  bool moved = false;
  for (int64_t i = 0; i < rm->size(); ++i)
    if (rm->data()[i] != before[(size_t)i]) moved = true;
  EXPECT_TRUE(moved);
  // eval mode leaves them alone
  std::vector<float> after(rm->data(), rm->data() + rm->size());
  (void)mswb_forward(y, p, false);
  for (int64_t i = 0; i < rm->size(); ++i) EXPECT_EQ(rm->data()[i], after[(size_t)i]);
}

TEST(Mswb, GradF64) {
  ParamSet<double> ps;
  Rng rng(534);
  auto p = make_mswb(ps, "mswb", 4, rng);
  Tensor<double> y = random_tensor<double>({4, 8, 8}, rng);
  y.set_requires_grad(true);
  auto loss = [&](GradTape<double>* tape) {
    Tensor<double> o = mswb_forward(y, p, true, tape);
    return mean_all(mul(o, o, tape), tape);
  };
  std::vector<Tensor<double>> leaves = ps.trainable();
  leaves.push_back(y);
  EXPECT_LT(grad_check_leaves<double>(loss, leaves, kGradEpsF64, 2, 0x5eed, kCompositeFloorF64),
            kGradTolF64);
}

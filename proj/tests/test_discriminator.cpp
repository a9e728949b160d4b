#include "mtsic/discriminator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtsic/gradcheck.hpp"
#include "test_util.hpp"

using namespace mtsic;
using namespace mtsic_test;

namespace {

double leaky02(double v) { return v > 0.0 ? v : 0.2 * v; }

// mirror of the scoring head: two affine layers around a leaky activation
double mlp_ref(const std::vector<double>& s, const Mlp<double>& m) {
  const int hidden = m.w1.dim(0), cin = m.w1.dim(1);
  std::vector<double> h(hidden);
  for (int j = 0; j < hidden; ++j) {
    double acc = m.b1.data()[j];
    for (int c = 0; c < cin; ++c) acc += m.w1.data()[(int64_t)j * cin + c] * s[c];
    h[j] = leaky02(acc);
  }
  double out = m.b2.data()[0];
  for (int j = 0; j < hidden; ++j) out += m.w2.data()[j] * h[j];
  return out;
}

}  // namespace

TEST(Discriminator, ScoreCountAndFeatureShapes) {
  ParamSet<float> ps;
  Rng rng(701);
  auto p = make_discriminator(ps, 4, 4, 2, rng);
  Tensor<float> x = random_tensor<float>({3, 16, 16}, rng);
  Tensor<float> cube = random_tensor<float>({4, 16, 16}, rng);
  auto out = disc_forward(x, cube, p);
  EXPECT_EQ(out.scale_count, 2);
  ASSERT_EQ(out.scores.size(), 6u);
  for (const auto& s : out.scores) EXPECT_EQ(s.shape(), (std::vector<int>{1}));
  ASSERT_EQ(out.features.size(), 2u);
  EXPECT_EQ(out.features[0].shape(), (std::vector<int>{8, 4, 4}));
  EXPECT_EQ(out.features[1].shape(), (std::vector<int>{16, 2, 2}));
}

TEST(Discriminator, ScoresMatchStatisticsOracle) {
  ParamSet<double> ps;
  Rng rng(702);
  auto p = make_discriminator(ps, 4, 4, 2, rng);
  Tensor<double> x = random_tensor<double>({3, 16, 16}, rng);
  Tensor<double> cube = random_tensor<double>({4, 16, 16}, rng);
  auto out = disc_forward(x, cube, p);
  for (int m = 0; m < out.scale_count; ++m) {
    const Tensor<double>& f = out.features[m];
    const int ch = f.dim(0), hw = f.dim(1) * f.dim(2);
    std::vector<double> mean(ch), mx(ch), sd(ch);
    for (int c = 0; c < ch; ++c) {
      const double* d = f.data() + (int64_t)c * hw;
      double s = 0.0, hi = d[0];
      for (int i = 0; i < hw; ++i) {
        s += d[i];
        hi = std::max(hi, d[i]);
      }
      mean[c] = s / hw;
      mx[c] = hi;
      double v = 0.0;
      for (int i = 0; i < hw; ++i) v += (d[i] - mean[c]) * (d[i] - mean[c]);
      sd[c] = std::sqrt(v / hw);
    }
    const std::vector<double>* stats[3] = {&mean, &mx, &sd};
    for (int n = 0; n < 3; ++n) {
      double want = mlp_ref(*stats[n], p.scales[m].heads[n]);
      EXPECT_NEAR(out.scores[m * 3 + n].at({0}), want, 1e-10)
          << "scale " << m << " head " << n;
    }
  }
}

TEST(Discriminator, ScoresDependOnConditioning) {
  ParamSet<float> ps;
  Rng rng(703);
  auto p = make_discriminator(ps, 3, 4, 1, rng);
  Tensor<float> x = random_tensor<float>({3, 8, 8}, rng);
  Tensor<float> cube_a = random_tensor<float>({3, 8, 8}, rng);
  Tensor<float> cube_b = cube_a.clone();
  for (int64_t i = 0; i < cube_b.size(); ++i) cube_b.data()[i] += 0.5f;
  auto out_a = disc_forward(x, cube_a, p);
  auto out_b = disc_forward(x, cube_b, p);
  bool any_diff = false;
  for (size_t i = 0; i < out_a.scores.size(); ++i)
    if (out_a.scores[i].at({0}) != out_b.scores[i].at({0})) any_diff = true;
  EXPECT_TRUE(any_diff);
}

TEST(Discriminator, DetachedSharesWeightsButStopsGradients) {
  ParamSet<double> ps;
  Rng rng(704);
  auto p = make_discriminator(ps, 2, 2, 1, rng);
  auto d = disc_detached(p);
  EXPECT_EQ(d.initial.w.data(), p.initial.w.data());
  EXPECT_EQ(d.scales[0].heads[0].w1.data(), p.scales[0].heads[0].w1.data());

  Tensor<double> x = random_tensor<double>({3, 8, 8}, rng);
  Tensor<double> cube = random_tensor<double>({2, 8, 8}, rng);
  x.set_requires_grad(true);
  GradTape<double> tape;
  auto out = disc_forward(x, cube, d, &tape);
  Tensor<double> acc = mean_all(mul(out.scores[0], out.scores[0], &tape), &tape);
  for (size_t i = 1; i < out.scores.size(); ++i)
    acc = add(acc, mean_all(mul(out.scores[i], out.scores[i], &tape), &tape), &tape);
  tape.backward(acc);

  const double* gx = x.grad_data();
  ASSERT_NE(gx, nullptr);
  bool any = false;
  for (int64_t i = 0; i < x.size(); ++i)
    if (gx[i] != 0.0) any = true;
  EXPECT_TRUE(any);
  for (const auto& item : ps.items) {
    if (!item.trainable) continue;
    const double* g = item.t.grad_data();
    if (!g) continue;
    for (int64_t i = 0; i < item.t.size(); ++i)
      ASSERT_EQ(g[i], 0.0) << "gradient leaked into " << item.name;
  }
}

TEST(Discriminator, GradF64) {
  ParamSet<double> ps;
  Rng rng(705);
  auto p = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<double> x = random_tensor<double>({3, 8, 8}, rng);
  Tensor<double> cube = random_tensor<double>({2, 8, 8}, rng);
  x.set_requires_grad(true);
  cube.set_requires_grad(true);
  auto loss = [&](GradTape<double>* tape) {
    auto out = disc_forward(x, cube, p, tape);
    Tensor<double> acc = mean_all(mul(out.scores[0], out.scores[0], tape), tape);
    for (size_t i = 1; i < out.scores.size(); ++i)
      acc = add(acc, mean_all(mul(out.scores[i], out.scores[i], tape), tape), tape);
    for (const auto& f : out.features)
      acc = add(acc, mean_all(mul(f, f, tape), tape), tape);
    return acc;
  };
  std::vector<Tensor<double>> leaves = ps.trainable();
  leaves.push_back(x);
  leaves.push_back(cube);
  EXPECT_LT(grad_check_leaves<double>(loss, leaves, kGradEpsF64, 2, 0x5eed, kCompositeFloorF64),
            kGradTolF64);
}

TEST(Discriminator, RejectsBadShapes) {
  ParamSet<float> ps;
  Rng rng(706);
  auto p = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<float> bad_x({2, 8, 8});
  Tensor<float> cube({2, 8, 8});
  EXPECT_THROW(disc_forward(bad_x, cube, p), std::invalid_argument);
  Tensor<float> x({3, 8, 8});
  Tensor<float> bad_cube({2, 6, 8});
  EXPECT_THROW(disc_forward(x, bad_cube, p), std::invalid_argument);
  ParamSet<float> ps2;
  EXPECT_THROW(make_discriminator(ps2, 2, 2, 0, rng), std::invalid_argument);
}

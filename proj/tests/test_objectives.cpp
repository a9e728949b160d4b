#include "mtsic/objectives.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mtsic/gradcheck.hpp"
#include "test_util.hpp"

using namespace mtsic;
using namespace mtsic_test;

namespace {

Tensor<double> scalar1(double v) { return Tensor<double>::full({1}, v); }

double sigmoid_ref(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST(Cgan, ZeroLogitsGiveLogTwo) {
  std::vector<Tensor<double>> real = {scalar1(0.0), scalar1(0.0)};
  std::vector<Tensor<double>> fake = {scalar1(0.0), scalar1(0.0)};
  auto pair = cgan_losses(real, fake);
  EXPECT_NEAR(pair.loss_d.at({0}), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(pair.loss_g.at({0}), std::log(2.0), 1e-12);
}

TEST(Cgan, GeneratorGradientIsSigmoidMinusOne) {
  for (double s : {-2.0, -0.5, 0.0, 1.3, 3.0}) {
    Tensor<double> sf = scalar1(s);
    sf.set_requires_grad(true);
    GradTape<double> tape;
    std::vector<Tensor<double>> real = {scalar1(0.0)};
    std::vector<Tensor<double>> fake = {sf};
    auto pair = cgan_losses(real, fake, &tape);
    tape.backward(pair.loss_g);
    ASSERT_NE(sf.grad_data(), nullptr);
    EXPECT_NEAR(sf.grad_data()[0], sigmoid_ref(s) - 1.0, 1e-12) << "logit " << s;
  }
}

TEST(Cgan, DiscriminatorGradientIsSigmoid) {
  Tensor<double> sf = scalar1(0.7);
  sf.set_requires_grad(true);
  GradTape<double> tape;
  std::vector<Tensor<double>> real = {scalar1(-0.3)};
  std::vector<Tensor<double>> fake = {sf};
  auto pair = cgan_losses(real, fake, &tape);
  tape.backward(pair.loss_d);
  EXPECT_NEAR(sf.grad_data()[0], sigmoid_ref(0.7), 1e-12);
}

TEST(Cgan, RejectsMismatchedScoreCounts) {
  std::vector<Tensor<double>> real = {scalar1(0.0)};
  std::vector<Tensor<double>> fake = {scalar1(0.0), scalar1(0.0)};
  EXPECT_THROW(cgan_losses(real, fake), std::invalid_argument);
}

TEST(PixelL1, ClosedForms) {
  Rng rng(801);
  Tensor<double> gt = random_tensor<double>({3, 6, 6}, rng);
  EXPECT_EQ(pixel_l1(gt, gt).at({0}), 0.0);
  Tensor<double> gen = gt.clone();
  for (int64_t i = 0; i < gen.size(); ++i) gen.data()[i] += 0.3;
  EXPECT_NEAR(pixel_l1(gen, gt).at({0}), 0.3, 1e-12);
}

TEST(Sam, ParallelSpectraScoreNearZero) {
  Rng rng(802);
  Tensor<double> gt = random_tensor<double>({3, 5, 5}, rng, 0.2, 1.0);
  EXPECT_LT(sam_loss(gt, gt).at({0}), 1e-3);
  Tensor<double> gen = gt.clone();
  for (int64_t i = 0; i < gen.size(); ++i) gen.data()[i] *= 1.7;
  EXPECT_LT(sam_loss(gen, gt).at({0}), 1e-3);
}

TEST(Sam, OrthogonalSpectraScoreHalfPi) {
  Tensor<double> gen({2, 4, 4});
  Tensor<double> gt({2, 4, 4});
  for (int i = 0; i < 16; ++i) {
    gen.data()[i] = 1.0;       // channel 0
    gen.data()[16 + i] = 0.0;  // channel 1
    gt.data()[i] = 0.0;
    gt.data()[16 + i] = 1.0;
  }
  EXPECT_NEAR(sam_loss(gen, gt).at({0}), M_PI / 2.0, 1e-9);
}

TEST(Sam, InvariantToPositiveScaling) {
  Rng rng(803);
  Tensor<double> a = random_tensor<double>({3, 5, 5}, rng, 0.2, 1.0);
  Tensor<double> b = random_tensor<double>({3, 5, 5}, rng, 0.2, 1.0);
  Tensor<double> a2 = a.clone();
  for (int64_t i = 0; i < a2.size(); ++i) a2.data()[i] *= 2.0;
  // the 1e-8 guard in the norm product shifts the cosine at that order
  EXPECT_NEAR(sam_loss(a2, b).at({0}), sam_loss(a, b).at({0}), 5e-8);
}

TEST(FftLoss, ConstantOffsetClosedForm) {
  Rng rng(804);
  Tensor<double> gt = random_tensor<double>({1, 4, 4}, rng);
  Tensor<double> gen = gt.clone();
  for (int64_t i = 0; i < gen.size(); ++i) gen.data()[i] += 0.25;
  // a constant offset moves only the DC bin, by h*w times the offset
  EXPECT_NEAR(fft_loss(gen, gt).at({0}), 0.25, 1e-12);

  Tensor<double> gt2 = random_tensor<double>({2, 4, 4}, rng);
  Tensor<double> gen2 = gt2.clone();
  for (int i = 0; i < 16; ++i) gen2.data()[i] += 0.25;
  for (int i = 16; i < 32; ++i) gen2.data()[i] += 0.15;
  EXPECT_NEAR(fft_loss(gen2, gt2).at({0}), (0.25 + 0.15) / 2.0, 1e-12);
}

TEST(FftLoss, PositivelyHomogeneous) {
  Rng rng(805);
  Tensor<double> a = random_tensor<double>({2, 5, 6}, rng);
  Tensor<double> b = random_tensor<double>({2, 5, 6}, rng);
  double base = fft_loss(a, b).at({0});
  Tensor<double> a2 = a.clone(), b2 = b.clone();
  for (int64_t i = 0; i < a2.size(); ++i) {
    a2.data()[i] *= 1.7;
    b2.data()[i] *= 1.7;
  }
  EXPECT_NEAR(fft_loss(a2, b2).at({0}), 1.7 * base, 1e-10 * std::max(1.0, base));
}

TEST(EdgeLoss, ConstantImagesGiveExactZero) {
  Tensor<double> gen = Tensor<double>::full({2, 6, 6}, 0.8);
  Tensor<double> gt = Tensor<double>::full({2, 6, 6}, -0.4);
  EXPECT_EQ(edge_loss(gen, gt).at({0}), 0.0);
}

TEST(EdgeLoss, MatchesNaiveSobelOracle) {
  Rng rng(806);
  Tensor<double> gen = random_tensor<double>({2, 8, 8}, rng);
  Tensor<double> gt = random_tensor<double>({2, 8, 8}, rng);
  const int c = 2, h = 8, w = 8;
  const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  auto mag_at = [&](const Tensor<double>& img, int ch, int oi, int oj) {
    double gx = 0, gy = 0;
    for (int ki = 0; ki < 3; ++ki)
      for (int kj = 0; kj < 3; ++kj) {
        double v = img.data()[((int64_t)ch * h + oi + ki) * w + oj + kj];
        gx += kx[ki][kj] * v;
        gy += ky[ki][kj] * v;
      }
    return std::sqrt(gx * gx + gy * gy + 1e-6);
  };
  double acc = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int oi = 0; oi < h - 2; ++oi)
      for (int oj = 0; oj < w - 2; ++oj)
        acc += std::fabs(mag_at(gen, ch, oi, oj) - mag_at(gt, ch, oi, oj));
  double want = acc / (c * (h - 2) * (w - 2));
  EXPECT_NEAR(edge_loss(gen, gt).at({0}), want, 1e-12);
}

TEST(TvLoss, RampAndConstantClosedForms) {
  Tensor<double> flat = Tensor<double>::full({3, 5, 7}, 0.9);
  EXPECT_EQ(tv_loss(flat).at({0}), 0.0);
  Tensor<double> ramp({2, 5, 7});
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 7; ++j) ramp.data()[((int64_t)c * 5 + i) * 7 + j] = 0.2 * j;
  EXPECT_NEAR(tv_loss(ramp).at({0}), 0.2, 1e-12);
}

TEST(Ssim, IdenticalImagesScoreOne) {
  Rng rng(807);
  Tensor<double> a = random_tensor<double>({3, 12, 12}, rng);
  EXPECT_NEAR(ssim_mean(a, a, 2.0).at({0}), 1.0, 1e-12);
  EXPECT_NEAR(ssim_loss(a, a).at({0}), 0.0, 1e-12);
}

TEST(Ssim, SymmetricAndBelowOneForDistinctImages) {
  Rng rng(808);
  Tensor<double> a = random_tensor<double>({2, 12, 12}, rng);
  Tensor<double> b = random_tensor<double>({2, 12, 12}, rng);
  double ab = ssim_mean(a, b, 2.0).at({0});
  double ba = ssim_mean(b, a, 2.0).at({0});
  EXPECT_NEAR(ab, ba, 1e-12);
  EXPECT_LT(ab, 1.0);
  EXPECT_GT(ssim_loss(a, b).at({0}), 0.0);
}

TEST(Perceptual, ZeroAtEqualityAndMatchesFeatureOracle) {
  ParamSet<double> ps;
  Rng rng(809);
  auto disc = make_discriminator(ps, 2, 2, 2, rng);
  Tensor<double> gen = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> gt = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> cube = random_tensor<double>({2, 12, 12}, rng);
  EXPECT_EQ(perceptual_loss(gen, gen, cube, disc).at({0}), 0.0);

  auto frozen = disc_detached(disc);
  auto fg = disc_forward<double>(gen, cube, frozen, nullptr);
  auto ft = disc_forward<double>(gt, cube, frozen, nullptr);
  double acc = 0;
  for (size_t m = 0; m < fg.features.size(); ++m) {
    const Tensor<double>&fa = fg.features[m], &fb = ft.features[m];
    double s = 0;
    for (int64_t i = 0; i < fa.size(); ++i) s += std::fabs(fa.data()[i] - fb.data()[i]);
    acc += s / fa.size();
  }
  double want = acc / fg.features.size();
  EXPECT_NEAR(perceptual_loss(gen, gt, cube, disc).at({0}), want, 1e-12);
}

TEST(GeneratorLoss, DefaultWeightsMatchPublishedValues) {
  LossWeights<float> w;
  EXPECT_EQ(w.cgan, 1.0f);
  EXPECT_EQ(w.pix, 50.0f);
  EXPECT_EQ(w.sam, 0.1f);
  EXPECT_EQ(w.fft, 1.0f);
  EXPECT_EQ(w.edge, 0.5f);
  EXPECT_EQ(w.per, 1.0f);
  EXPECT_EQ(w.tv, 1.0f);
  EXPECT_EQ(w.ssim, 1.0f);
}

TEST(GeneratorLoss, TotalIsWeightedSumOfTerms) {
  ParamSet<double> ps;
  Rng rng(810);
  auto disc = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<double> gen = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> gt = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> cube = random_tensor<double>({2, 12, 12}, rng);
  LossWeights<double> w;
  w.cgan = 2.0;
  w.pix = 3.0;
  w.sam = 5.0;
  w.fft = 7.0;
  w.edge = 11.0;
  w.per = 13.0;
  w.tv = 17.0;
  w.ssim = 19.0;
  auto t = generator_loss(gen, gt, cube, disc, w);
  auto r = report_from(t);
  double want = 2.0 * r.cgan + 3.0 * r.pix + 5.0 * r.sam + 7.0 * r.fft + 11.0 * r.edge +
                13.0 * r.per + 17.0 * r.tv + 19.0 * r.ssim;
  EXPECT_NEAR(r.total, want, 1e-9 * std::max(1.0, std::fabs(want)));
}

TEST(GeneratorLoss, TermsMatchStandaloneFunctions) {
  ParamSet<double> ps;
  Rng rng(811);
  auto disc = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<double> gen = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> gt = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> cube = random_tensor<double>({2, 12, 12}, rng);
  LossWeights<double> w;
  auto t = generator_loss(gen, gt, cube, disc, w);
  EXPECT_NEAR(t.pix.at({0}), pixel_l1(gen, gt).at({0}), 1e-12);
  EXPECT_NEAR(t.sam.at({0}), sam_loss(gen, gt).at({0}), 1e-12);
  EXPECT_NEAR(t.fft.at({0}), fft_loss(gen, gt).at({0}), 1e-12);
  EXPECT_NEAR(t.edge.at({0}), edge_loss(gen, gt).at({0}), 1e-12);
  EXPECT_NEAR(t.tv.at({0}), tv_loss(gen).at({0}), 1e-12);
  EXPECT_NEAR(t.ssim.at({0}), ssim_loss(gen, gt).at({0}), 1e-12);
  EXPECT_NEAR(t.per.at({0}), perceptual_loss(gen, gt, cube, disc).at({0}), 1e-12);
  auto frozen = disc_detached(disc);
  auto fake_out = disc_forward<double>(gen, cube, frozen, nullptr);
  auto pair = cgan_losses(fake_out.scores, fake_out.scores);
  EXPECT_NEAR(t.cgan.at({0}), pair.loss_g.at({0}), 1e-12);
}

TEST(GeneratorLoss, EveryTermNonNegative) {
  ParamSet<double> ps;
  Rng rng(812);
  auto disc = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<double> gen = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> gt = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> cube = random_tensor<double>({2, 12, 12}, rng);
  LossWeights<double> w;
  auto r = report_from(generator_loss(gen, gt, cube, disc, w));
  EXPECT_GE(r.cgan, 0.0);
  EXPECT_GE(r.pix, 0.0);
  EXPECT_GE(r.sam, 0.0);
  EXPECT_GE(r.fft, 0.0);
  EXPECT_GE(r.edge, 0.0);
  EXPECT_GE(r.per, 0.0);
  EXPECT_GE(r.tv, 0.0);
  EXPECT_GE(r.ssim, 0.0);
}

TEST(SamGrads, FixedRotationClosedFormAndGradF64) {
  // per-pixel 2-vectors a fixed 0.7 rad apart: the loss equals the angle
  // exactly (up to the 1e-8 denominator guard) and, with the cosine bounded
  // away from +-1 everywhere, the acos curvature stays small enough for a
  // full finite-difference scan
  const int h = 6, w = 6;
  Tensor<double> gen({2, h, w}), gt({2, h, w});
  Rng rng(816);
  for (int i = 0; i < h * w; ++i) {
    double phi = rng.uniform(0.1, 0.6), r = rng.uniform(0.5, 1.2), s = rng.uniform(0.5, 1.2);
    gen.data()[i] = r * std::cos(phi);
    gen.data()[h * w + i] = r * std::sin(phi);
    gt.data()[i] = s * std::cos(phi + 0.7);
    gt.data()[h * w + i] = s * std::sin(phi + 0.7);
  }
  EXPECT_NEAR(sam_loss(gen, gt).at({0}), 0.7, 1e-6);

  gen.set_requires_grad(true);
  auto loss = [&](GradTape<double>* t) { return sam_loss(gen, gt, t); };
  EXPECT_LT(grad_check_leaves<double>(loss, {gen}, kGradEpsF64, 24, 0x5eed, kCompositeFloorF64),
            kGradTolF64);
}

TEST(ObjectiveGrads, AnalyticTermsF64) {
  Rng rng(813);
  Tensor<double> gt = random_tensor<double>({2, 12, 12}, rng);
  Tensor<double> x0 = random_tensor<double>({2, 12, 12}, rng);
  auto scan = [&](const char* name,
                  std::function<Tensor<double>(const Tensor<double>&, GradTape<double>*)> f) {
    double err = grad_check<double>(f, x0, kGradEpsF64);
    EXPECT_LT(err, kGradTolF64) << name;
  };
  // smooth or piecewise-linear with healthy gradients: full component scan
  scan("pixel", [&](const Tensor<double>& x, GradTape<double>* t) { return pixel_l1(x, gt, t); });
  scan("edge", [&](const Tensor<double>& x, GradTape<double>* t) { return edge_loss(x, gt, t); });

  // the remaining terms have components whose analytic gradient is exactly
  // zero (sign cancellations) or ~1e-7, where central differences read pure
  // rounding noise against a 1e-8 floor; probe with the raised floor, and a
  // larger step for the piecewise-linear terms (no truncation penalty there)
  x0.set_requires_grad(true);
  auto probe = [&](const char* name, std::function<Tensor<double>(GradTape<double>*)> loss,
                   double eps) {
    double err =
        grad_check_leaves<double>(loss, {x0}, eps, 24, 0x5eed, kCompositeFloorF64);
    EXPECT_LT(err, kGradTolF64) << name;
  };
  probe("fft", [&](GradTape<double>* t) { return fft_loss(x0, gt, t); }, 1e-4);
  probe("tv", [&](GradTape<double>* t) { return tv_loss(x0, t); }, 1e-4);
  probe("ssim", [&](GradTape<double>* t) { return ssim_loss(x0, gt, t); }, kGradEpsF64);
}

TEST(ObjectiveGrads, TotalThroughDiscriminatorF64) {
  ParamSet<double> ps;
  Rng rng(814);
  auto disc = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<double> gen = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> gt = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> cube = random_tensor<double>({2, 12, 12}, rng);
  gen.set_requires_grad(true);
  LossWeights<double> w;
  auto loss = [&](GradTape<double>* tape) {
    return generator_loss(gen, gt, cube, disc, w, tape).total;
  };
  EXPECT_LT(grad_check_leaves<double>(loss, {gen}, kGradEpsF64, 3, 0x5eed, kCompositeFloorF64),
            kGradTolF64);
}

TEST(ObjectiveGrads, DiscriminatorSideF64) {
  ParamSet<double> ps;
  Rng rng(815);
  auto disc = make_discriminator(ps, 2, 2, 1, rng);
  Tensor<double> fake = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> real = random_tensor<double>({3, 12, 12}, rng);
  Tensor<double> cube = random_tensor<double>({2, 12, 12}, rng);
  auto loss = [&](GradTape<double>* tape) {
    auto out_r = disc_forward(real, cube, disc, tape);
    auto out_f = disc_forward(fake, cube, disc, tape);
    return cgan_losses(out_r.scores, out_f.scores, tape).loss_d;
  };
  EXPECT_LT(grad_check_leaves<double>(loss, ps.trainable(), kGradEpsF64, 2, 0x5eed,
                                      kCompositeFloorF64),
            kGradTolF64);
}

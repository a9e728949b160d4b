#pragma once

#include "mtsic/discriminator.hpp"

// The composite training objective: a non-saturating conditional GAN pair
// plus pixel, spectral-angle, frequency, edge, perceptual, total-variation,
// and structural-similarity terms combined by fixed weights.

namespace mtsic {

template <typename S>
struct LossWeights {
  S cgan = S(1);
  S pix = S(50);
  S sam = S(0.1);
  S fft = S(1);
  S edge = S(0.5);
  S per = S(1);
  S tv = S(1);
  S ssim = S(1);
};

// every term as a {1} tensor on the tape, plus the weighted total
template <typename S>
struct LossTerms {
  Tensor<S> cgan, pix, sam, fft, edge, per, tv, ssim, total;
};

// plain scalar snapshot of LossTerms for logging
template <typename S>
struct LossReport {
  S cgan = 0, pix = 0, sam = 0, fft = 0, edge = 0, per = 0, tv = 0, ssim = 0, total = 0;
};

template <typename S>
struct CganPair {
  Tensor<S> loss_d, loss_g;
};

// stable log-sigmoid forms averaged over all M*N logits:
// loss_D = mean[softplus(-s_real) + softplus(s_fake)], loss_G = mean[softplus(-s_fake)]
template <typename S>
CganPair<S> cgan_losses(const std::vector<Tensor<S>>& real, const std::vector<Tensor<S>>& fake,
                        GradTape<S>* tape = nullptr);

template <typename S>
Tensor<S> pixel_l1(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape = nullptr);

// mean per-pixel spectral angle in radians, eps = 1e-8 against zero vectors
template <typename S>
Tensor<S> sam_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape = nullptr);

// mean |dRe| + mean |dIm| of the 2-D DFTs, averaged over channels
template <typename S>
Tensor<S> fft_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape = nullptr);

// L1 between Sobel gradient magnitudes sqrt(gx^2 + gy^2 + 1e-6), valid region
template <typename S>
Tensor<S> edge_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape = nullptr);

// anisotropic total variation: mean |forward dx| + mean |forward dy|
template <typename S>
Tensor<S> tv_loss(const Tensor<S>& x, GradTape<S>* tape = nullptr);

// mean SSIM over an 11x11 Gaussian window (sigma 1.5) on range R
template <typename S>
Tensor<S> ssim_mean(const Tensor<S>& a, const Tensor<S>& b, S range, GradTape<S>* tape = nullptr);

// 1 - ssim_mean on the [-1,1] training range (R = 2)
template <typename S>
Tensor<S> ssim_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape = nullptr);

// L1 between the discriminator adaptation activations of (gen|cube) and
// (gt|cube), averaged over scales; the discriminator weights are treated as
// constants so the gradient reaches the generator only
template <typename S>
Tensor<S> perceptual_loss(const Tensor<S>& gen, const Tensor<S>& gt, const Tensor<S>& cube,
                          const DiscParams<S>& disc, GradTape<S>* tape = nullptr);

// assembles every generator-side term; runs the (detached) discriminator once
// on the generated image for both the adversarial score and the perceptual
// features, and once on the reference without a tape
template <typename S>
LossTerms<S> generator_loss(const Tensor<S>& gen, const Tensor<S>& gt, const Tensor<S>& cube,
                            const DiscParams<S>& disc, const LossWeights<S>& w,
                            GradTape<S>* tape = nullptr);

template <typename S>
LossReport<S> report_from(const LossTerms<S>& t);

}  // namespace mtsic

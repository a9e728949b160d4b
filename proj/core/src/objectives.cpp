#include "mtsic/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace mtsic {
namespace {

// stack N scalar {1} tensors into one {N,1,1} tensor
template <typename S>
Tensor<S> stack_scalars(const std::vector<Tensor<S>>& xs, GradTape<S>* tape) {
  if (xs.empty()) throw std::invalid_argument("stack_scalars: no inputs");
  std::vector<Tensor<S>> r3;
  r3.reserve(xs.size());
  for (const Tensor<S>& x : xs) r3.push_back(x.reshape({1, 1, 1}));
  return concat_channels(r3, tape);
}

// per-channel copies of a fixed 2-D stencil as a depthwise kernel {C,1,kh,kw}
template <typename S>
Tensor<S> depthwise_stencil(int c, int kh, int kw, const S* taps) {
  Tensor<S> w({c, 1, kh, kw});
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < kh * kw; ++j) w.data()[(int64_t)i * kh * kw + j] = taps[j];
  return w;
}

template <typename S>
Tensor<S> gaussian_window(int c, int k, double sigma) {
  std::vector<S> taps((size_t)k * k);
  const double mid = (k - 1) / 2.0;
  double total = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double d2 = (i - mid) * (i - mid) + (j - mid) * (j - mid);
      const double v = std::exp(-d2 / (2 * sigma * sigma));
      taps[(size_t)i * k + j] = S(v);
      total += v;
    }
  }
  for (S& v : taps) v = S((double)v / total);
  return depthwise_stencil(c, k, k, taps.data());
}

}  // namespace

template <typename S>
CganPair<S> cgan_losses(const std::vector<Tensor<S>>& real, const std::vector<Tensor<S>>& fake,
                        GradTape<S>* tape) {
  if (real.size() != fake.size())
    throw std::invalid_argument("cgan_losses: score counts disagree");
  Tensor<S> sr = stack_scalars(real, tape);
  Tensor<S> sf = stack_scalars(fake, tape);
  CganPair<S> out;
  out.loss_d = add(mean_all(softplus(scale(sr, S(-1), tape), tape), tape),
                   mean_all(softplus(sf, tape), tape), tape);
  out.loss_g = mean_all(softplus(scale(sf, S(-1), tape), tape), tape);
  return out;
}

template <typename S>
Tensor<S> pixel_l1(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape) {
  return mean_all(abs_op(sub(gen, gt, tape), tape), tape);
}

template <typename S>
Tensor<S> sam_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape) {
  Tensor<S> dot = channel_sum(mul(gen, gt, tape), tape);
  Tensor<S> ng = sqrt_op(channel_sum(mul(gen, gen, tape), tape), tape);
  Tensor<S> nt = sqrt_op(channel_sum(mul(gt, gt, tape), tape), tape);
  Tensor<S> denom = add_scalar(mul(ng, nt, tape), S(1e-8), tape);
  Tensor<S> cosine = clamp(div(dot, denom, tape), S(-1), S(1), tape);
  return mean_all(acos_op(cosine, tape), tape);
}

template <typename S>
Tensor<S> fft_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape) {
  Fft2Pair<S> fg = fft2(gen, tape);
  Fft2Pair<S> ft = fft2(gt, tape);
  return add(mean_all(abs_op(sub(fg.re, ft.re, tape), tape), tape),
             mean_all(abs_op(sub(fg.im, ft.im, tape), tape), tape), tape);
}

template <typename S>
Tensor<S> edge_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape) {
  const int c = gen.dim(0);
  static const S kx[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
  static const S ky[9] = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
  Tensor<S> wx = depthwise_stencil<S>(c, 3, 3, kx);
  Tensor<S> wy = depthwise_stencil<S>(c, 3, 3, ky);
  ConvSpec dw;
  dw.groups = c;
  Tensor<S> none;
  auto magnitude = [&](const Tensor<S>& img) {
    Tensor<S> gx = conv2d(img, wx, none, dw, tape);
    Tensor<S> gy = conv2d(img, wy, none, dw, tape);
    Tensor<S> sq = add(mul(gx, gx, tape), mul(gy, gy, tape), tape);
    return sqrt_op(add_scalar(sq, S(1e-6), tape), tape);
  };
  return mean_all(abs_op(sub(magnitude(gen), magnitude(gt), tape), tape), tape);
}

template <typename S>
Tensor<S> tv_loss(const Tensor<S>& x, GradTape<S>* tape) {
  const int h = x.dim(1), w = x.dim(2);
  Tensor<S> dx = sub(crop_spatial(x, 0, h, 1, w, tape), crop_spatial(x, 0, h, 0, w - 1, tape),
                     tape);
  Tensor<S> dy = sub(crop_spatial(x, 1, h, 0, w, tape), crop_spatial(x, 0, h - 1, 0, w, tape),
                     tape);
  return add(mean_all(abs_op(dx, tape), tape), mean_all(abs_op(dy, tape), tape), tape);
}

template <typename S>
Tensor<S> ssim_mean(const Tensor<S>& a, const Tensor<S>& b, S range, GradTape<S>* tape) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("ssim_mean: shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  const int c = a.dim(0);
  Tensor<S> win = gaussian_window<S>(c, 11, 1.5);
  ConvSpec dw;
  dw.groups = c;
  Tensor<S> none;
  const S c1 = S(0.01) * range * (S(0.01) * range);
  const S c2 = S(0.03) * range * (S(0.03) * range);
  Tensor<S> mu_a = conv2d(a, win, none, dw, tape);
  Tensor<S> mu_b = conv2d(b, win, none, dw, tape);
  Tensor<S> e_aa = conv2d(mul(a, a, tape), win, none, dw, tape);
  Tensor<S> e_bb = conv2d(mul(b, b, tape), win, none, dw, tape);
  Tensor<S> e_ab = conv2d(mul(a, b, tape), win, none, dw, tape);
  Tensor<S> var_a = sub(e_aa, mul(mu_a, mu_a, tape), tape);
  Tensor<S> var_b = sub(e_bb, mul(mu_b, mu_b, tape), tape);
  Tensor<S> cov = sub(e_ab, mul(mu_a, mu_b, tape), tape);
  Tensor<S> num = mul(add_scalar(scale(mul(mu_a, mu_b, tape), S(2), tape), c1, tape),
                      add_scalar(scale(cov, S(2), tape), c2, tape), tape);
  Tensor<S> den =
      mul(add_scalar(add(mul(mu_a, mu_a, tape), mul(mu_b, mu_b, tape), tape), c1, tape),
          add_scalar(add(var_a, var_b, tape), c2, tape), tape);
  return mean_all(div(num, den, tape), tape);
}

template <typename S>
Tensor<S> ssim_loss(const Tensor<S>& gen, const Tensor<S>& gt, GradTape<S>* tape) {
  return add_scalar(scale(ssim_mean(gen, gt, S(2), tape), S(-1), tape), S(1), tape);
}

template <typename S>
Tensor<S> perceptual_loss(const Tensor<S>& gen, const Tensor<S>& gt, const Tensor<S>& cube,
                          const DiscParams<S>& disc, GradTape<S>* tape) {
  DiscParams<S> frozen = disc_detached(disc);
  DiscOutput<S> fg = disc_forward(gen, cube, frozen, tape);
  DiscOutput<S> ft = disc_forward<S>(gt, cube, frozen, nullptr);
  Tensor<S> acc;
  for (size_t m = 0; m < fg.features.size(); ++m) {
    Tensor<S> term = mean_all(abs_op(sub(fg.features[m], ft.features[m], tape), tape), tape);
    acc = acc.defined() ? add(acc, term, tape) : term;
  }
  return scale(acc, S(1) / S((int)fg.features.size()), tape);
}

template <typename S>
LossTerms<S> generator_loss(const Tensor<S>& gen, const Tensor<S>& gt, const Tensor<S>& cube,
                            const DiscParams<S>& disc, const LossWeights<S>& w,
                            GradTape<S>* tape) {
  DiscParams<S> frozen = disc_detached(disc);
  DiscOutput<S> fake_out = disc_forward(gen, cube, frozen, tape);
  DiscOutput<S> ref_out = disc_forward<S>(gt, cube, frozen, nullptr);

  LossTerms<S> t;
  Tensor<S> sf = stack_scalars(fake_out.scores, tape);
  t.cgan = mean_all(softplus(scale(sf, S(-1), tape), tape), tape);
  t.pix = pixel_l1(gen, gt, tape);
  t.sam = sam_loss(gen, gt, tape);
  t.fft = fft_loss(gen, gt, tape);
  t.edge = edge_loss(gen, gt, tape);
  Tensor<S> acc;
  for (size_t m = 0; m < fake_out.features.size(); ++m) {
    Tensor<S> term =
        mean_all(abs_op(sub(fake_out.features[m], ref_out.features[m], tape), tape), tape);
    acc = acc.defined() ? add(acc, term, tape) : term;
  }
  t.per = scale(acc, S(1) / S((int)fake_out.features.size()), tape);
  t.tv = tv_loss(gen, tape);
  t.ssim = ssim_loss(gen, gt, tape);

  t.total = scale(t.cgan, w.cgan, tape);
  t.total = add(t.total, scale(t.pix, w.pix, tape), tape);
  t.total = add(t.total, scale(t.sam, w.sam, tape), tape);
  t.total = add(t.total, scale(t.fft, w.fft, tape), tape);
  t.total = add(t.total, scale(t.edge, w.edge, tape), tape);
  t.total = add(t.total, scale(t.per, w.per, tape), tape);
  t.total = add(t.total, scale(t.tv, w.tv, tape), tape);
  t.total = add(t.total, scale(t.ssim, w.ssim, tape), tape);
  return t;
}

template <typename S>
LossReport<S> report_from(const LossTerms<S>& t) {
  LossReport<S> r;
  r.cgan = t.cgan.data()[0];
  r.pix = t.pix.data()[0];
  r.sam = t.sam.data()[0];
  r.fft = t.fft.data()[0];
  r.edge = t.edge.data()[0];
  r.per = t.per.data()[0];
  r.tv = t.tv.data()[0];
  r.ssim = t.ssim.data()[0];
  r.total = t.total.data()[0];
  return r;
}

#define MTSIC_INSTANTIATE_OBJECTIVES(S)                                                        \
  template CganPair<S> cgan_losses<S>(const std::vector<Tensor<S>>&,                           \
                                      const std::vector<Tensor<S>>&, GradTape<S>*);           \
  template Tensor<S> pixel_l1<S>(const Tensor<S>&, const Tensor<S>&, GradTape<S>*);           \
  template Tensor<S> sam_loss<S>(const Tensor<S>&, const Tensor<S>&, GradTape<S>*);           \
  template Tensor<S> fft_loss<S>(const Tensor<S>&, const Tensor<S>&, GradTape<S>*);           \
  template Tensor<S> edge_loss<S>(const Tensor<S>&, const Tensor<S>&, GradTape<S>*);          \
  template Tensor<S> tv_loss<S>(const Tensor<S>&, GradTape<S>*);                              \
  template Tensor<S> ssim_mean<S>(const Tensor<S>&, const Tensor<S>&, S, GradTape<S>*);       \
  template Tensor<S> ssim_loss<S>(const Tensor<S>&, const Tensor<S>&, GradTape<S>*);          \
  template Tensor<S> perceptual_loss<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, \
                                        const DiscParams<S>&, GradTape<S>*);                  \
  template LossTerms<S> generator_loss<S>(const Tensor<S>&, const Tensor<S>&,                 \
                                          const Tensor<S>&, const DiscParams<S>&,             \
                                          const LossWeights<S>&, GradTape<S>*);               \
  template LossReport<S> report_from<S>(const LossTerms<S>&);

MTSIC_INSTANTIATE_OBJECTIVES(float)
MTSIC_INSTANTIATE_OBJECTIVES(double)

}  // namespace mtsic

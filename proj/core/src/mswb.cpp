#include "mtsic/mswb.hpp"

#include <algorithm>
#include <stdexcept>

namespace mtsic {
namespace {

constexpr StripDir kDirs[3] = {StripDir::diag45, StripDir::horiz, StripDir::diag135};
constexpr int kAsymK[3] = {7, 11, 21};

}  // namespace

template <typename S>
CbamParams<S> make_cbam(ParamSet<S>& ps, const std::string& name, int dim, Rng& rng) {
  CbamParams<S> p;
  const int hidden = std::max(1, dim / 8);
  p.mlp = make_mlp(ps, name + ".mlp", dim, hidden, dim, rng);
  ConvSpec s7;
  s7.pad = 3;
  p.spatial = make_conv(ps, name + ".spatial", 2, 1, 7, 7, s7, rng, true);
  return p;
}

template <typename S>
Tensor<S> cbam(const Tensor<S>& x, const CbamParams<S>& p, GradTape<S>* tape) {
  const int c = x.dim(0);
  Tensor<S> avg = spatial_mean(x, tape);
  Tensor<S> mx = spatial_max(x, tape);
  Tensor<S> gate = sigmoid(add(p.mlp(avg, tape), p.mlp(mx, tape), tape), tape);
  Tensor<S> xc = mul(x, gate.reshape({c, 1, 1}), tape);
  Tensor<S> stat = concat_channels<S>({channel_mean(xc, tape), channel_max(xc, tape)}, tape);
  Tensor<S> sp = sigmoid(p.spatial(stat, tape), tape);
  return mul(xc, sp, tape);
}

template <typename S>
SffmParams<S> make_sffm(ParamSet<S>& ps, const std::string& name, int dim, Rng& rng) {
  SffmParams<S> p;
  p.ln0 = make_layer_norm(ps, name + ".ln0", dim);
  p.ln1 = make_layer_norm(ps, name + ".ln1", dim);
  for (int i = 0; i < 3; ++i) {
    const std::string di = std::to_string(i);
    Tensor<S> k0({dim, 9});
    init_fan_in(k0, rng, 9);
    p.strip0[i] = ps.add(name + ".strip0." + di, k0);
    Tensor<S> k1({dim, 9});
    init_fan_in(k1, rng, 9);
    p.strip1[i] = ps.add(name + ".strip1." + di, k1);
    const int k = kAsymK[i];
    ConvSpec row;  // 1 x k
    row.groups = dim;
    row.pad_h = 0;
    row.pad_w = k / 2;
    p.asym_a[i] = make_conv(ps, name + ".asym_a." + di, dim, dim, 1, k, row, rng, false);
    ConvSpec col;  // k x 1
    col.groups = dim;
    col.pad_h = k / 2;
    col.pad_w = 0;
    p.asym_b[i] = make_conv(ps, name + ".asym_b." + di, dim, dim, k, 1, col, rng, false);
    p.fuse[i] = make_conv(ps, name + ".fuse." + di, dim, dim, 1, 1, ConvSpec{}, rng, true);
  }
  p.cat_fuse = make_conv(ps, name + ".cat_fuse", 3 * dim, dim, 1, 1, ConvSpec{}, rng, true);
  ConvSpec s3;
  s3.pad = 1;
  p.sq0 = make_conv(ps, name + ".sq0", dim, dim, 3, 3, s3, rng, true);
  p.sq1 = make_conv(ps, name + ".sq1", dim, dim, 3, 3, s3, rng, true);
  return p;
}

template <typename S>
Tensor<S> sffm(const Tensor<S>& y_spatial, const Tensor<S>& y_freq, const SffmParams<S>& p,
               GradTape<S>* tape) {
  const int h2 = y_freq.dim(1), w2 = y_freq.dim(2);
  Tensor<S> in0 = resize_bilinear(y_spatial, y_spatial.dim(1) / 2, y_spatial.dim(2) / 2, tape);
  if (in0.dim(1) != h2 || in0.dim(2) != w2 || in0.dim(0) != y_freq.dim(0))
    throw std::invalid_argument("sffm: stream shapes disagree after downsampling, " +
                                shape_str(in0.shape()) + " vs " + shape_str(y_freq.shape()));
  Tensor<S> n0 = p.ln0(in0, tape);
  Tensor<S> n1 = p.ln1(y_freq, tape);
  std::vector<Tensor<S>> dirs;
  dirs.reserve(3);
  for (int i = 0; i < 3; ++i) {
    Tensor<S> t0 = strip_conv2d(n0, p.strip0[i], kDirs[i], tape);
    t0 = p.asym_b[i](p.asym_a[i](t0, tape), tape);
    Tensor<S> t1 = strip_conv2d(n1, p.strip1[i], kDirs[i], tape);
    t1 = p.asym_b[i](p.asym_a[i](t1, tape), tape);
    dirs.push_back(p.fuse[i](add(t0, t1, tape), tape));
  }
  Tensor<S> out = p.cat_fuse(concat_channels(dirs, tape), tape);
  out = add(out, p.sq0(in0, tape), tape);
  return add(out, p.sq1(y_freq, tape), tape);
}

template <typename S>
MswbParams<S> make_mswb(ParamSet<S>& ps, const std::string& name, int dim, Rng& rng) {
  MswbParams<S> p;
  p.cbam = make_cbam(ps, name + ".cbam", dim, rng);
  p.spp_ln = make_layer_norm(ps, name + ".spp_ln", dim);
  p.spp_fuse = make_conv(ps, name + ".spp_fuse", 4 * dim, dim, 1, 1, ConvSpec{}, rng, true);
  p.cbr_global = make_cbr(ps, name + ".cbr_global", dim, dim, 3, 1, rng);
  p.cbr_local = make_cbr(ps, name + ".cbr_local", dim, dim, 3, 1, rng);
  p.cbr_low = make_cbr(ps, name + ".cbr_low", dim, dim, 3, 1, rng);
  p.cbr_high = make_cbr(ps, name + ".cbr_high", dim, dim, 3, 1, rng);
  p.high_fuse = make_conv(ps, name + ".high_fuse", 3 * dim, dim, 1, 1, ConvSpec{}, rng, true);
  p.sffm_gl = make_sffm(ps, name + ".sffm_gl", dim, rng);
  p.sffm_lh = make_sffm(ps, name + ".sffm_lh", dim, rng);
  p.out_fuse = make_conv(ps, name + ".out_fuse", 2 * dim, dim, 1, 1, ConvSpec{}, rng, true);
  return p;
}

template <typename S>
Tensor<S> mswb_forward(const Tensor<S>& y, MswbParams<S>& p, bool training, GradTape<S>* tape) {
  const int H = y.dim(1), W = y.dim(2);
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("mswb_forward: extents must be even, got " +
                                shape_str(y.shape()));
  Tensor<S> y_global = p.cbr_global(cbam(y, p.cbam, tape), training, tape);

  std::vector<Tensor<S>> spp = {max_pool_same(y, 5, tape), max_pool_same(y, 9, tape),
                                max_pool_same(y, 13, tape), p.spp_ln(y, tape)};
  Tensor<S> y_local =
      p.cbr_local(p.spp_fuse(concat_channels(spp, tape), tape), training, tape);

  WaveletPyramid<S> pyr = haar_dwt2(y, tape);
  Tensor<S> y_low = p.cbr_low(pyr.ll, training, tape);
  Tensor<S> high = p.high_fuse(concat_channels<S>({pyr.lh, pyr.hl, pyr.hh}, tape), tape);
  Tensor<S> y_high = p.cbr_high(high, training, tape);

  Tensor<S> fused_gl = sffm(y_global, y_low, p.sffm_gl, tape);
  Tensor<S> fused_lh = sffm(y_local, y_high, p.sffm_lh, tape);
  Tensor<S> out =
      p.out_fuse(concat_channels<S>({fused_gl, fused_lh}, tape), tape);
  return add(resize_bilinear(out, H, W, tape), y, tape);
}

template CbamParams<float> make_cbam<float>(ParamSet<float>&, const std::string&, int, Rng&);
template CbamParams<double> make_cbam<double>(ParamSet<double>&, const std::string&, int, Rng&);
template Tensor<float> cbam<float>(const Tensor<float>&, const CbamParams<float>&,
                                   GradTape<float>*);
template Tensor<double> cbam<double>(const Tensor<double>&, const CbamParams<double>&,
                                     GradTape<double>*);
template SffmParams<float> make_sffm<float>(ParamSet<float>&, const std::string&, int, Rng&);
template SffmParams<double> make_sffm<double>(ParamSet<double>&, const std::string&, int, Rng&);
template Tensor<float> sffm<float>(const Tensor<float>&, const Tensor<float>&,
                                   const SffmParams<float>&, GradTape<float>*);
template Tensor<double> sffm<double>(const Tensor<double>&, const Tensor<double>&,
                                     const SffmParams<double>&, GradTape<double>*);
template MswbParams<float> make_mswb<float>(ParamSet<float>&, const std::string&, int, Rng&);
template MswbParams<double> make_mswb<double>(ParamSet<double>&, const std::string&, int, Rng&);
template Tensor<float> mswb_forward<float>(const Tensor<float>&, MswbParams<float>&, bool,
                                           GradTape<float>*);
template Tensor<double> mswb_forward<double>(const Tensor<double>&, MswbParams<double>&, bool,
                                             GradTape<double>*);

}  // namespace mtsic

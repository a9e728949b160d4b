#include <Eigen/Core>
#include <cstring>

#include "mtsic/ops.hpp"

namespace mtsic {
namespace {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int conv_out_extent(int in, int k, int stride, int pad, int dil) {
  return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

// Unfold one channel group into a (Cg*kh*kw) x (Ho*Wo) matrix.
template <typename S>
void im2col(const S* x, int Cg, int H, int W, int kh, int kw, int stride, int pad_h, int pad_w,
            int dil, int Ho, int Wo, S* col) {
  const int64_t hw = (int64_t)H * W;
  const int64_t ohw = (int64_t)Ho * Wo;
  for (int c = 0; c < Cg; ++c) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        S* dst = col + ((int64_t)(c * kh + i) * kw + j) * ohw;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * stride - pad_h + i * dil;
          S* row = dst + (int64_t)oh * Wo;
          if (ih < 0 || ih >= H) {
            std::memset(row, 0, sizeof(S) * (size_t)Wo);
            continue;
          }
          const S* src = x + c * hw + (int64_t)ih * W;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * stride - pad_w + j * dil;
            row[ow] = (iw >= 0 && iw < W) ? src[iw] : S(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add column gradients back onto the image grid.
template <typename S>
void col2im_add(const S* col, int Cg, int H, int W, int kh, int kw, int stride, int pad_h,
                int pad_w, int dil, int Ho, int Wo, S* gx) {
  const int64_t hw = (int64_t)H * W;
  const int64_t ohw = (int64_t)Ho * Wo;
  for (int c = 0; c < Cg; ++c) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const S* src = col + ((int64_t)(c * kh + i) * kw + j) * ohw;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * stride - pad_h + i * dil;
          if (ih < 0 || ih >= H) continue;
          S* dst = gx + c * hw + (int64_t)ih * W;
          const S* row = src + (int64_t)oh * Wo;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * stride - pad_w + j * dil;
            if (iw >= 0 && iw < W) dst[iw] += row[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, const ConvSpec& spec,
                 GradTape<S>* tape) {
  if (x.rank() != 3 || w.rank() != 4)
    throw std::invalid_argument("conv2d: expected x {C,H,W} and w {O,C/g,kh,kw}, got " +
                                shape_str(x.shape()) + " and " + shape_str(w.shape()));
  if (spec.stride < 1 || spec.dilation < 1 || spec.ph() < 0 || spec.pw() < 0 || spec.groups < 1)
    throw std::invalid_argument("conv2d: bad stride/pad/dilation/groups");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int G = spec.groups;
  if (C % G != 0 || O % G != 0 || w.dim(1) != C / G)
    throw std::invalid_argument("conv2d: channel/group mismatch, x " + shape_str(x.shape()) +
                                " w " + shape_str(w.shape()) + " groups " + std::to_string(G));
  if (b.defined() && (b.rank() != 1 || b.dim(0) != O))
    throw std::invalid_argument("conv2d: bias shape " + shape_str(b.shape()));
  const int Ho = conv_out_extent(H, kh, spec.stride, spec.ph(), spec.dilation);
  const int Wo = conv_out_extent(W, kw, spec.stride, spec.pw(), spec.dilation);
  if (Ho <= 0 || Wo <= 0)
    throw std::invalid_argument("conv2d: empty output for input " + shape_str(x.shape()) +
                                " kernel " + shape_str(w.shape()));
  const int Cg = C / G, Og = O / G;
  const int64_t hw = (int64_t)H * W;
  const int64_t ohw = (int64_t)Ho * Wo;
  const bool depthwise = (G == C && O == C);

  Tensor<S> y({O, Ho, Wo});
  const S* xd = x.data();
  const S* wd = w.data();
  S* yd = y.data();
  if (depthwise) {
    for (int c = 0; c < C; ++c) {
      const S* xp = xd + c * hw;
      const S* wp = wd + (int64_t)c * kh * kw;
      const S bias = b.defined() ? b.data()[c] : S(0);
      S* yp = yd + c * ohw;
      for (int oh = 0; oh < Ho; ++oh) {
        for (int ow = 0; ow < Wo; ++ow) {
          S acc = bias;
          for (int i = 0; i < kh; ++i) {
            const int ih = oh * spec.stride - spec.ph() + i * spec.dilation;
            if (ih < 0 || ih >= H) continue;
            for (int j = 0; j < kw; ++j) {
              const int iw = ow * spec.stride - spec.pw() + j * spec.dilation;
              if (iw >= 0 && iw < W) acc += xp[(int64_t)ih * W + iw] * wp[i * kw + j];
            }
          }
          yp[(int64_t)oh * Wo + ow] = acc;
        }
      }
    }
  } else {
    std::vector<S> col((size_t)((int64_t)Cg * kh * kw * ohw));
    Eigen::Map<const MatX<S>> Wm(wd, O, (int64_t)Cg * kh * kw);
    Eigen::Map<MatX<S>> Ym(yd, O, ohw);
    for (int g = 0; g < G; ++g) {
      im2col(xd + (int64_t)g * Cg * hw, Cg, H, W, kh, kw, spec.stride, spec.ph(), spec.pw(),
             spec.dilation, Ho, Wo, col.data());
      Eigen::Map<const MatX<S>> Cm(col.data(), (int64_t)Cg * kh * kw, ohw);
      Ym.middleRows(g * Og, Og).noalias() = Wm.middleRows(g * Og, Og) * Cm;
    }
    if (b.defined()) {
      const S* bd = b.data();
      for (int o = 0; o < O; ++o) {
        S* yp = yd + o * ohw;
        for (int64_t p = 0; p < ohw; ++p) yp[p] += bd[o];
      }
    }
  }

  if (tape) {
    int xn = tape->track(x);
    int wn = tape->track(w);
    int bn = b.defined() ? tape->track(b) : -1;
    if (xn >= 0 || wn >= 0 || bn >= 0) {
      auto xs = x.storage();
      auto ws = w.storage();
      ConvSpec sp = spec;
      int yn = tape->emit(
          y.size(), [xs, ws, xn, wn, bn, sp, C, H, W, O, kh, kw, G, Cg, Og, Ho, Wo, hw, ohw,
                     depthwise](GradTape<S>& t, const S* g) {
            const S* xd = xs->data.data();
            const S* wd = ws->data.data();
            if (bn >= 0) {
              S* gb = t.grad_acc(bn);
              for (int o = 0; o < O; ++o) {
                S acc = 0;
                const S* gp = g + o * ohw;
                for (int64_t p = 0; p < ohw; ++p) acc += gp[p];
                gb[o] += acc;
              }
            }
            if (depthwise && xn < 0 && wn < 0) return;
            if (depthwise) {
              S* gx = xn >= 0 ? t.grad_acc(xn) : nullptr;
              S* gw = wn >= 0 ? t.grad_acc(wn) : nullptr;
              for (int c = 0; c < C; ++c) {
                const S* xp = xd + c * hw;
                const S* wp = wd + (int64_t)c * kh * kw;
                const S* gp = g + c * ohw;
                for (int oh = 0; oh < Ho; ++oh) {
                  for (int ow = 0; ow < Wo; ++ow) {
                    const S gv = gp[(int64_t)oh * Wo + ow];
                    if (gv == S(0)) continue;
                    for (int i = 0; i < kh; ++i) {
                      const int ih = oh * sp.stride - sp.ph() + i * sp.dilation;
                      if (ih < 0 || ih >= H) continue;
                      for (int j = 0; j < kw; ++j) {
                        const int iw = ow * sp.stride - sp.pw() + j * sp.dilation;
                        if (iw < 0 || iw >= W) continue;
                        if (gw) gw[(int64_t)c * kh * kw + i * kw + j] += gv * xp[(int64_t)ih * W + iw];
                        if (gx) gx[c * hw + (int64_t)ih * W + iw] += gv * wp[i * kw + j];
                      }
                    }
                  }
                }
              }
              return;
            }
            const int64_t ck = (int64_t)Cg * kh * kw;
            std::vector<S> col((size_t)(ck * ohw));
            Eigen::Map<const MatX<S>> Wm(wd, O, ck);
            Eigen::Map<const MatX<S>> Gm(g, O, ohw);
            for (int gi = 0; gi < G; ++gi) {
              if (wn >= 0) {
                im2col(xd + (int64_t)gi * Cg * hw, Cg, H, W, kh, kw, sp.stride, sp.ph(), sp.pw(),
                       sp.dilation, Ho, Wo, col.data());
                Eigen::Map<const MatX<S>> Cm(col.data(), ck, ohw);
                Eigen::Map<MatX<S>> GW(t.grad_acc(wn), O, ck);
                GW.middleRows(gi * Og, Og).noalias() += Gm.middleRows(gi * Og, Og) * Cm.transpose();
              }
              if (xn >= 0) {
                Eigen::Map<MatX<S>> Cm(col.data(), ck, ohw);
                Cm.noalias() = Wm.middleRows(gi * Og, Og).transpose() * Gm.middleRows(gi * Og, Og);
                col2im_add(col.data(), Cg, H, W, kh, kw, sp.stride, sp.ph(), sp.pw(), sp.dilation,
                           Ho, Wo, t.grad_acc(xn) + (int64_t)gi * Cg * hw);
              }
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> conv_transpose2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int stride,
                           GradTape<S>* tape) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(0) != x.dim(0))
    throw std::invalid_argument("conv_transpose2d: expected x {C,H,W} and w {C,O,kh,kw}, got " +
                                shape_str(x.shape()) + " and " + shape_str(w.shape()));
  if (stride < 1) throw std::invalid_argument("conv_transpose2d: bad stride");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int O = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (b.defined() && (b.rank() != 1 || b.dim(0) != O))
    throw std::invalid_argument("conv_transpose2d: bias shape " + shape_str(b.shape()));
  const int Ho = (H - 1) * stride + kh;
  const int Wo = (W - 1) * stride + kw;
  const int64_t hw = (int64_t)H * W;
  const int64_t ohw = (int64_t)Ho * Wo;
  const int64_t ok = (int64_t)O * kh * kw;

  Tensor<S> y({O, Ho, Wo});
  {
    // col = W^T . X, then scatter each kernel tap onto the upsampled grid
    std::vector<S> col((size_t)(ok * hw));
    Eigen::Map<const MatX<S>> Wm(w.data(), C, ok);
    Eigen::Map<const MatX<S>> Xm(x.data(), C, hw);
    Eigen::Map<MatX<S>> Cm(col.data(), ok, hw);
    Cm.noalias() = Wm.transpose() * Xm;
    S* yd = y.data();
    if (b.defined()) {
      const S* bd = b.data();
      for (int o = 0; o < O; ++o)
        for (int64_t p = 0; p < ohw; ++p) yd[o * ohw + p] = bd[o];
    }
    for (int o = 0; o < O; ++o) {
      for (int i = 0; i < kh; ++i) {
        for (int j = 0; j < kw; ++j) {
          const S* src = col.data() + ((int64_t)(o * kh + i) * kw + j) * hw;
          for (int h = 0; h < H; ++h) {
            S* dst = yd + o * ohw + (int64_t)(h * stride + i) * Wo + j;
            const S* row = src + (int64_t)h * W;
            for (int ww = 0; ww < W; ++ww) dst[(int64_t)ww * stride] += row[ww];
          }
        }
      }
    }
  }

  if (tape) {
    int xn = tape->track(x);
    int wn = tape->track(w);
    int bn = b.defined() ? tape->track(b) : -1;
    if (xn >= 0 || wn >= 0 || bn >= 0) {
      auto xs = x.storage();
      auto ws = w.storage();
      int yn = tape->emit(
          y.size(),
          [xs, ws, xn, wn, bn, C, H, W, O, kh, kw, stride, hw, ohw, ok, Wo](GradTape<S>& t,
                                                                            const S* g) {
            if (bn >= 0) {
              S* gb = t.grad_acc(bn);
              for (int o = 0; o < O; ++o) {
                S acc = 0;
                for (int64_t p = 0; p < ohw; ++p) acc += g[o * ohw + p];
                gb[o] += acc;
              }
            }
            if (xn < 0 && wn < 0) return;
            // gather output gradients back into column form
            std::vector<S> gcol((size_t)(ok * hw));
            for (int o = 0; o < O; ++o) {
              for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                  S* dst = gcol.data() + ((int64_t)(o * kh + i) * kw + j) * hw;
                  for (int h = 0; h < H; ++h) {
                    const S* src = g + o * ohw + (int64_t)(h * stride + i) * Wo + j;
                    S* row = dst + (int64_t)h * W;
                    for (int ww = 0; ww < W; ++ww) row[ww] = src[(int64_t)ww * stride];
                  }
                }
              }
            }
            Eigen::Map<const MatX<S>> GC(gcol.data(), ok, hw);
            if (xn >= 0) {
              Eigen::Map<const MatX<S>> Wm(ws->data.data(), C, ok);
              Eigen::Map<MatX<S>> GX(t.grad_acc(xn), C, hw);
              GX.noalias() += Wm * GC;
            }
            if (wn >= 0) {
              Eigen::Map<const MatX<S>> Xm(xs->data.data(), C, hw);
              Eigen::Map<MatX<S>> GW(t.grad_acc(wn), C, ok);
              GW.noalias() += Xm * GC.transpose();
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> strip_conv2d(const Tensor<S>& x, const Tensor<S>& k, StripDir dir, GradTape<S>* tape) {
  if (x.rank() != 3 || k.rank() != 2 || k.dim(0) != x.dim(0) || k.dim(1) != 9)
    throw std::invalid_argument("strip_conv2d: expected x {C,H,W} and k {C,9}, got " +
                                shape_str(x.shape()) + " and " + shape_str(k.shape()));
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int dy = dir == StripDir::diag45 ? -1 : dir == StripDir::horiz ? 0 : 1;
  const int dx = 1;
  const int64_t hw = (int64_t)H * W;

  Tensor<S> y({C, H, W});
  const S* xd = x.data();
  const S* kd = k.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    const S* xp = xd + c * hw;
    const S* kp = kd + (int64_t)c * 9;
    S* yp = yd + c * hw;
    for (int r = 0; r < H; ++r) {
      for (int w = 0; w < W; ++w) {
        S acc = 0;
        for (int t = -4; t <= 4; ++t) {
          const int ih = r + t * dy, iw = w + t * dx;
          if (ih >= 0 && ih < H && iw >= 0 && iw < W) acc += kp[t + 4] * xp[(int64_t)ih * W + iw];
        }
        yp[(int64_t)r * W + w] = acc;
      }
    }
  }

  if (tape) {
    int xn = tape->track(x);
    int kn = tape->track(k);
    if (xn >= 0 || kn >= 0) {
      auto xs = x.storage();
      auto ks = k.storage();
      int yn = tape->emit(y.size(), [xs, ks, xn, kn, C, H, W, dy, dx, hw](GradTape<S>& t,
                                                                          const S* g) {
        const S* xd = xs->data.data();
        const S* kd = ks->data.data();
        S* gx = xn >= 0 ? t.grad_acc(xn) : nullptr;
        S* gk = kn >= 0 ? t.grad_acc(kn) : nullptr;
        for (int c = 0; c < C; ++c) {
          const S* xp = xd + c * hw;
          const S* kp = kd + (int64_t)c * 9;
          const S* gp = g + c * hw;
          for (int r = 0; r < H; ++r) {
            for (int w = 0; w < W; ++w) {
              const S gv = gp[(int64_t)r * W + w];
              if (gv == S(0)) continue;
              for (int tt = -4; tt <= 4; ++tt) {
                const int ih = r + tt * dy, iw = w + tt * dx;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                if (gk) gk[(int64_t)c * 9 + tt + 4] += gv * xp[(int64_t)ih * W + iw];
                if (gx) gx[c * hw + (int64_t)ih * W + iw] += gv * kp[tt + 4];
              }
            }
          }
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template Tensor<float> conv2d<float>(const Tensor<float>&, const Tensor<float>&,
                                     const Tensor<float>&, const ConvSpec&, GradTape<float>*);
template Tensor<double> conv2d<double>(const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<double>&, const ConvSpec&, GradTape<double>*);
template Tensor<float> conv_transpose2d<float>(const Tensor<float>&, const Tensor<float>&,
                                               const Tensor<float>&, int, GradTape<float>*);
template Tensor<double> conv_transpose2d<double>(const Tensor<double>&, const Tensor<double>&,
                                                 const Tensor<double>&, int, GradTape<double>*);
template Tensor<float> strip_conv2d<float>(const Tensor<float>&, const Tensor<float>&, StripDir,
                                           GradTape<float>*);
template Tensor<double> strip_conv2d<double>(const Tensor<double>&, const Tensor<double>&,
                                             StripDir, GradTape<double>*);

}  // namespace mtsic

#include <algorithm>
#include <cmath>

#include "mtsic/ops.hpp"

namespace mtsic {
namespace {

template <typename S>
void require_chw(const Tensor<S>& x, const char* name) {
  if (x.rank() != 3)
    throw std::invalid_argument(std::string(name) + ": expected C x H x W, got " +
                                shape_str(x.shape()));
}

}  // namespace

template <typename S>
Tensor<S> max_pool_same(const Tensor<S>& x, int k, GradTape<S>* tape) {
  require_chw(x, "max_pool_same");
  if (k < 1) throw std::invalid_argument("max_pool_same: bad window");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int half = k / 2;
  const int64_t hw = (int64_t)H * W;
  Tensor<S> y(x.shape());
  std::vector<int64_t> arg((size_t)x.size());
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    for (int h = 0; h < H; ++h) {
      const int h0 = std::max(0, h - half), h1 = std::min(H - 1, h + half);
      for (int w = 0; w < W; ++w) {
        const int w0 = std::max(0, w - half), w1 = std::min(W - 1, w + half);
        S best = xd[c * hw + (int64_t)h0 * W + w0];
        int64_t bp = (int64_t)h0 * W + w0;
        for (int r = h0; r <= h1; ++r) {
          for (int q = w0; q <= w1; ++q) {
            const S v = xd[c * hw + (int64_t)r * W + q];
            if (v > best) {
              best = v;
              bp = (int64_t)r * W + q;
            }
          }
        }
        yd[c * hw + (int64_t)h * W + w] = best;
        arg[(size_t)(c * hw + (int64_t)h * W + w)] = bp;
      }
    }
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      const int64_t n = x.size();
      int yn = tape->emit(n, [xn, hw, n, arg = std::move(arg)](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int64_t i = 0; i < n; ++i) gx[(i / hw) * hw + arg[(size_t)i]] += g[i];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> avg_pool_same(const Tensor<S>& x, int k, GradTape<S>* tape) {
  require_chw(x, "avg_pool_same");
  if (k < 1) throw std::invalid_argument("avg_pool_same: bad window");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int half = k / 2;
  const int64_t hw = (int64_t)H * W;
  Tensor<S> y(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    for (int h = 0; h < H; ++h) {
      const int h0 = std::max(0, h - half), h1 = std::min(H - 1, h + half);
      for (int w = 0; w < W; ++w) {
        const int w0 = std::max(0, w - half), w1 = std::min(W - 1, w + half);
        S acc = 0;
        for (int r = h0; r <= h1; ++r)
          for (int q = w0; q <= w1; ++q) acc += xd[c * hw + (int64_t)r * W + q];
        yd[c * hw + (int64_t)h * W + w] = acc / S((h1 - h0 + 1) * (w1 - w0 + 1));
      }
    }
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(x.size(), [xn, C, H, W, half, hw](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c) {
          for (int h = 0; h < H; ++h) {
            const int h0 = std::max(0, h - half), h1 = std::min(H - 1, h + half);
            for (int w = 0; w < W; ++w) {
              const int w0 = std::max(0, w - half), w1 = std::min(W - 1, w + half);
              const S s = g[c * hw + (int64_t)h * W + w] / S((h1 - h0 + 1) * (w1 - w0 + 1));
              for (int r = h0; r <= h1; ++r)
                for (int q = w0; q <= w1; ++q) gx[c * hw + (int64_t)r * W + q] += s;
            }
          }
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> resize_bilinear(const Tensor<S>& x, int out_h, int out_w, GradTape<S>* tape) {
  require_chw(x, "resize_bilinear");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: bad output size");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int64_t hw = (int64_t)H * W;
  const int64_t ohw = (int64_t)out_h * out_w;
  // half-pixel mapping; each output samples up to 4 neighbours
  std::vector<int> r0v((size_t)out_h), r1v((size_t)out_h);
  std::vector<S> frv((size_t)out_h);
  const double sh = (double)H / out_h, sw = (double)W / out_w;
  for (int oh = 0; oh < out_h; ++oh) {
    double src = (oh + 0.5) * sh - 0.5;
    src = std::min(std::max(src, 0.0), (double)(H - 1));
    const int r0 = (int)src;
    r0v[(size_t)oh] = r0;
    r1v[(size_t)oh] = std::min(r0 + 1, H - 1);
    frv[(size_t)oh] = S(src - r0);
  }
  std::vector<int> c0v((size_t)out_w), c1v((size_t)out_w);
  std::vector<S> fcv((size_t)out_w);
  for (int ow = 0; ow < out_w; ++ow) {
    double src = (ow + 0.5) * sw - 0.5;
    src = std::min(std::max(src, 0.0), (double)(W - 1));
    const int c0 = (int)src;
    c0v[(size_t)ow] = c0;
    c1v[(size_t)ow] = std::min(c0 + 1, W - 1);
    fcv[(size_t)ow] = S(src - c0);
  }
  Tensor<S> y({C, out_h, out_w});
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    for (int oh = 0; oh < out_h; ++oh) {
      const int r0 = r0v[(size_t)oh], r1 = r1v[(size_t)oh];
      const S fr = frv[(size_t)oh];
      for (int ow = 0; ow < out_w; ++ow) {
        const int c0 = c0v[(size_t)ow], c1 = c1v[(size_t)ow];
        const S fc = fcv[(size_t)ow];
        const S v00 = xd[c * hw + (int64_t)r0 * W + c0];
        const S v01 = xd[c * hw + (int64_t)r0 * W + c1];
        const S v10 = xd[c * hw + (int64_t)r1 * W + c0];
        const S v11 = xd[c * hw + (int64_t)r1 * W + c1];
        yd[c * ohw + (int64_t)oh * out_w + ow] =
            (S(1) - fr) * ((S(1) - fc) * v00 + fc * v01) + fr * ((S(1) - fc) * v10 + fc * v11);
      }
    }
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(
          y.size(), [xn, C, W, out_h, out_w, hw, ohw, r0v = std::move(r0v), r1v = std::move(r1v),
                     frv = std::move(frv), c0v = std::move(c0v), c1v = std::move(c1v),
                     fcv = std::move(fcv)](GradTape<S>& t, const S* g) {
            S* gx = t.grad_acc(xn);
            for (int c = 0; c < C; ++c) {
              for (int oh = 0; oh < out_h; ++oh) {
                const int r0 = r0v[(size_t)oh], r1 = r1v[(size_t)oh];
                const S fr = frv[(size_t)oh];
                for (int ow = 0; ow < out_w; ++ow) {
                  const int c0 = c0v[(size_t)ow], c1 = c1v[(size_t)ow];
                  const S fc = fcv[(size_t)ow];
                  const S gv = g[c * ohw + (int64_t)oh * out_w + ow];
                  gx[c * hw + (int64_t)r0 * W + c0] += gv * (S(1) - fr) * (S(1) - fc);
                  gx[c * hw + (int64_t)r0 * W + c1] += gv * (S(1) - fr) * fc;
                  gx[c * hw + (int64_t)r1 * W + c0] += gv * fr * (S(1) - fc);
                  gx[c * hw + (int64_t)r1 * W + c1] += gv * fr * fc;
                }
              }
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> resize_nearest(const Tensor<S>& x, int out_h, int out_w, GradTape<S>* tape) {
  require_chw(x, "resize_nearest");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_nearest: bad output size");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int64_t hw = (int64_t)H * W;
  const int64_t ohw = (int64_t)out_h * out_w;
  std::vector<int> rv((size_t)out_h), cv((size_t)out_w);
  for (int oh = 0; oh < out_h; ++oh)
    rv[(size_t)oh] = std::min((int)((int64_t)oh * H / out_h), H - 1);
  for (int ow = 0; ow < out_w; ++ow)
    cv[(size_t)ow] = std::min((int)((int64_t)ow * W / out_w), W - 1);
  Tensor<S> y({C, out_h, out_w});
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c)
    for (int oh = 0; oh < out_h; ++oh)
      for (int ow = 0; ow < out_w; ++ow)
        yd[c * ohw + (int64_t)oh * out_w + ow] =
            xd[c * hw + (int64_t)rv[(size_t)oh] * W + cv[(size_t)ow]];
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(y.size(), [xn, C, W, out_h, out_w, hw, ohw, rv = std::move(rv),
                                     cv = std::move(cv)](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c)
          for (int oh = 0; oh < out_h; ++oh)
            for (int ow = 0; ow < out_w; ++ow)
              gx[c * hw + (int64_t)rv[(size_t)oh] * W + cv[(size_t)ow]] +=
                  g[c * ohw + (int64_t)oh * out_w + ow];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

#define MTSIC_INSTANTIATE_POOL(fn)                                               \
  template Tensor<float> fn<float>(const Tensor<float>&, int, GradTape<float>*); \
  template Tensor<double> fn<double>(const Tensor<double>&, int, GradTape<double>*);
MTSIC_INSTANTIATE_POOL(max_pool_same)
MTSIC_INSTANTIATE_POOL(avg_pool_same)
#undef MTSIC_INSTANTIATE_POOL

template Tensor<float> resize_bilinear<float>(const Tensor<float>&, int, int, GradTape<float>*);
template Tensor<double> resize_bilinear<double>(const Tensor<double>&, int, int,
                                                GradTape<double>*);
template Tensor<float> resize_nearest<float>(const Tensor<float>&, int, int, GradTape<float>*);
template Tensor<double> resize_nearest<double>(const Tensor<double>&, int, int,
                                               GradTape<double>*);

}  // namespace mtsic

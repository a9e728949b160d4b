#include <cstring>

#include "mtsic/ops.hpp"

namespace mtsic {

template <typename S>
Tensor<S> concat_channels(const std::vector<Tensor<S>>& xs, GradTape<S>* tape) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const int H = xs[0].dim(1), W = xs[0].dim(2);
  int C = 0;
  for (const Tensor<S>& x : xs) {
    if (x.rank() != 3 || x.dim(1) != H || x.dim(2) != W)
      throw std::invalid_argument("concat_channels: mismatched input " + shape_str(x.shape()));
    C += x.dim(0);
  }
  Tensor<S> y({C, H, W});
  const int64_t hw = (int64_t)H * W;
  S* yd = y.data();
  int64_t off = 0;
  for (const Tensor<S>& x : xs) {
    std::memcpy(yd + off * hw, x.data(), sizeof(S) * (size_t)(x.dim(0) * hw));
    off += x.dim(0);
  }
  if (tape) {
    bool any = false;
    std::vector<int> nodes;
    std::vector<int> chans;
    nodes.reserve(xs.size());
    for (const Tensor<S>& x : xs) {
      nodes.push_back(tape->track(x));
      chans.push_back(x.dim(0));
      any = any || nodes.back() >= 0;
    }
    if (any) {
      int yn = tape->emit((int64_t)C * hw, [nodes, chans, hw](GradTape<S>& t, const S* g) {
        int64_t off = 0;
        for (size_t i = 0; i < nodes.size(); ++i) {
          const int64_t n = (int64_t)chans[i] * hw;
          if (nodes[i] >= 0) {
            S* gx = t.grad_acc(nodes[i]);
            for (int64_t j = 0; j < n; ++j) gx[j] += g[off + j];
          }
          off += n;
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> slice_channels(const Tensor<S>& x, int c0, int c1, GradTape<S>* tape) {
  if (x.rank() != 3)
    throw std::invalid_argument("slice_channels: expected C x H x W, got " + shape_str(x.shape()));
  if (c0 < 0 || c1 > x.dim(0) || c0 >= c1)
    throw std::invalid_argument("slice_channels: bad range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") for " + shape_str(x.shape()));
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  Tensor<S> y({c1 - c0, x.dim(1), x.dim(2)});
  std::memcpy(y.data(), x.data() + (int64_t)c0 * hw, sizeof(S) * (size_t)y.size());
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      const int64_t n = y.size();
      int yn = tape->emit(n, [xn, c0, hw, n](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int64_t j = 0; j < n; ++j) gx[(int64_t)c0 * hw + j] += g[j];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> crop_spatial(const Tensor<S>& x, int r0, int r1, int c0, int c1, GradTape<S>* tape) {
  if (x.rank() != 3)
    throw std::invalid_argument("crop_spatial: expected C x H x W, got " + shape_str(x.shape()));
  if (r0 < 0 || r1 > x.dim(1) || r0 >= r1 || c0 < 0 || c1 > x.dim(2) || c0 >= c1)
    throw std::invalid_argument("crop_spatial: window out of bounds for " + shape_str(x.shape()));
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int oh = r1 - r0, ow = c1 - c0;
  Tensor<S> y({C, oh, ow});
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < oh; ++r)
      std::memcpy(yd + ((int64_t)c * oh + r) * ow, xd + ((int64_t)c * H + r0 + r) * W + c0,
                  sizeof(S) * (size_t)ow);
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(y.size(), [xn, C, H, W, r0, c0, oh, ow](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < oh; ++r)
            for (int w = 0; w < ow; ++w)
              gx[((int64_t)c * H + r0 + r) * W + c0 + w] += g[((int64_t)c * oh + r) * ow + w];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> pad_spatial(const Tensor<S>& x, int top, int bottom, int left, int right,
                      GradTape<S>* tape) {
  if (x.rank() != 3)
    throw std::invalid_argument("pad_spatial: expected C x H x W, got " + shape_str(x.shape()));
  if (top < 0 || bottom < 0 || left < 0 || right < 0)
    throw std::invalid_argument("pad_spatial: negative padding");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int oh = H + top + bottom, ow = W + left + right;
  Tensor<S> y({C, oh, ow});
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H; ++r)
      std::memcpy(yd + ((int64_t)c * oh + top + r) * ow + left, xd + ((int64_t)c * H + r) * W,
                  sizeof(S) * (size_t)W);
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(y.size(), [xn, C, H, W, top, left, oh, ow](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < H; ++r)
            for (int w = 0; w < W; ++w)
              gx[((int64_t)c * H + r) * W + w] += g[((int64_t)c * oh + top + r) * ow + left + w];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template Tensor<float> concat_channels<float>(const std::vector<Tensor<float>>&, GradTape<float>*);
template Tensor<double> concat_channels<double>(const std::vector<Tensor<double>>&, GradTape<double>*);
template Tensor<float> slice_channels<float>(const Tensor<float>&, int, int, GradTape<float>*);
template Tensor<double> slice_channels<double>(const Tensor<double>&, int, int, GradTape<double>*);
template Tensor<float> crop_spatial<float>(const Tensor<float>&, int, int, int, int, GradTape<float>*);
template Tensor<double> crop_spatial<double>(const Tensor<double>&, int, int, int, int, GradTape<double>*);
template Tensor<float> pad_spatial<float>(const Tensor<float>&, int, int, int, int, GradTape<float>*);
template Tensor<double> pad_spatial<double>(const Tensor<double>&, int, int, int, int, GradTape<double>*);

}  // namespace mtsic

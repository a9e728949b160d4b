#include <cmath>

#include "mtsic/ops.hpp"

namespace mtsic {
namespace {

template <typename S>
void require_chw(const Tensor<S>& x, const char* name) {
  if (x.rank() != 3)
    throw std::invalid_argument(std::string(name) + ": expected a C x H x W tensor, got " +
                                shape_str(x.shape()));
}

}  // namespace

template <typename S>
Tensor<S> sum_all(const Tensor<S>& x, GradTape<S>* tape) {
  Tensor<S> y({1});
  const S* xd = x.data();
  const int64_t n = x.size();
  S acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += xd[i];
  y.data()[0] = acc;
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(1, [xn, n](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int64_t i = 0; i < n; ++i) gx[i] += g[0];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> mean_all(const Tensor<S>& x, GradTape<S>* tape) {
  Tensor<S> y({1});
  const S* xd = x.data();
  const int64_t n = x.size();
  S acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += xd[i];
  y.data()[0] = acc / S(n);
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(1, [xn, n](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        const S s = g[0] / S(n);
        for (int64_t i = 0; i < n; ++i) gx[i] += s;
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> channel_sum(const Tensor<S>& x, GradTape<S>* tape) {
  require_chw(x, "channel_sum");
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  Tensor<S> y({1, x.dim(1), x.dim(2)});
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c)
    for (int64_t p = 0; p < hw; ++p) yd[p] += xd[c * hw + p];
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(hw, [xn, C, hw](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c)
          for (int64_t p = 0; p < hw; ++p) gx[c * hw + p] += g[p];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> channel_mean(const Tensor<S>& x, GradTape<S>* tape) {
  Tensor<S> s = channel_sum(x, tape);
  return scale(s, S(1) / S(x.dim(0)), tape);
}

template <typename S>
Tensor<S> channel_max(const Tensor<S>& x, GradTape<S>* tape) {
  require_chw(x, "channel_max");
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  Tensor<S> y({1, x.dim(1), x.dim(2)});
  std::vector<int> arg((size_t)hw, 0);
  const S* xd = x.data();
  S* yd = y.data();
  for (int64_t p = 0; p < hw; ++p) {
    S best = xd[p];
    int bc = 0;
    for (int c = 1; c < C; ++c) {
      if (xd[c * hw + p] > best) {
        best = xd[c * hw + p];
        bc = c;
      }
    }
    yd[p] = best;
    arg[(size_t)p] = bc;
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(hw, [xn, hw, arg = std::move(arg)](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int64_t p = 0; p < hw; ++p) gx[(int64_t)arg[(size_t)p] * hw + p] += g[p];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> spatial_mean(const Tensor<S>& x, GradTape<S>* tape) {
  require_chw(x, "spatial_mean");
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  Tensor<S> y({C});
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    S acc = 0;
    for (int64_t p = 0; p < hw; ++p) acc += xd[c * hw + p];
    yd[c] = acc / S(hw);
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(C, [xn, C, hw](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c) {
          const S s = g[c] / S(hw);
          for (int64_t p = 0; p < hw; ++p) gx[c * hw + p] += s;
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> spatial_max(const Tensor<S>& x, GradTape<S>* tape) {
  require_chw(x, "spatial_max");
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  Tensor<S> y({C});
  std::vector<int64_t> arg((size_t)C, 0);
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    S best = xd[c * hw];
    int64_t bp = 0;
    for (int64_t p = 1; p < hw; ++p) {
      if (xd[c * hw + p] > best) {
        best = xd[c * hw + p];
        bp = p;
      }
    }
    yd[c] = best;
    arg[(size_t)c] = bp;
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      int yn = tape->emit(C, [xn, C, hw, arg = std::move(arg)](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        for (int c = 0; c < C; ++c) gx[c * hw + arg[(size_t)c]] += g[c];
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> spatial_std(const Tensor<S>& x, GradTape<S>* tape) {
  require_chw(x, "spatial_std");
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  Tensor<S> y({C});
  std::vector<S> mean((size_t)C);
  const S* xd = x.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    S m = 0;
    for (int64_t p = 0; p < hw; ++p) m += xd[c * hw + p];
    m /= S(hw);
    S v = 0;
    for (int64_t p = 0; p < hw; ++p) {
      const S d = xd[c * hw + p] - m;
      v += d * d;
    }
    mean[(size_t)c] = m;
    yd[c] = std::sqrt(v / S(hw));  // exact 0 for a constant channel
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      auto xs = x.storage();
      auto ys = y.storage();
      int yn = tape->emit(
          C, [xs, ys, xn, C, hw, mean = std::move(mean)](GradTape<S>& t, const S* g) {
            S* gx = t.grad_acc(xn);
            const S* xd = xs->data.data();
            const S* yd = ys->data.data();
            for (int c = 0; c < C; ++c) {
              const S denom = S(hw) * std::max(yd[c], S(1e-12));
              const S s = g[c] / denom;
              for (int64_t p = 0; p < hw; ++p)
                gx[c * hw + p] += s * (xd[c * hw + p] - mean[(size_t)c]);
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& x, int axis, GradTape<S>* tape) {
  if (axis < 0 || axis >= x.rank())
    throw std::invalid_argument("softmax: axis out of range for " + shape_str(x.shape()));
  const int K = x.dim(axis);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  Tensor<S> y(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t base = o * K * inner + i;
      S mx = xd[base];
      for (int k = 1; k < K; ++k) mx = std::max(mx, xd[base + k * inner]);
      S z = 0;
      for (int k = 0; k < K; ++k) {
        const S e = std::exp(xd[base + k * inner] - mx);
        yd[base + k * inner] = e;
        z += e;
      }
      for (int k = 0; k < K; ++k) yd[base + k * inner] /= z;
    }
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      auto ys = y.storage();
      int yn = tape->emit(x.size(), [ys, xn, K, outer, inner](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        const S* yd = ys->data.data();
        for (int64_t o = 0; o < outer; ++o) {
          for (int64_t i = 0; i < inner; ++i) {
            const int64_t base = o * K * inner + i;
            S dot = 0;
            for (int k = 0; k < K; ++k) dot += g[base + k * inner] * yd[base + k * inner];
            for (int k = 0; k < K; ++k)
              gx[base + k * inner] += yd[base + k * inner] * (g[base + k * inner] - dot);
          }
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

#define MTSIC_INSTANTIATE_RED(fn)                                            \
  template Tensor<float> fn<float>(const Tensor<float>&, GradTape<float>*);  \
  template Tensor<double> fn<double>(const Tensor<double>&, GradTape<double>*);

MTSIC_INSTANTIATE_RED(sum_all)
MTSIC_INSTANTIATE_RED(mean_all)
MTSIC_INSTANTIATE_RED(channel_sum)
MTSIC_INSTANTIATE_RED(channel_mean)
MTSIC_INSTANTIATE_RED(channel_max)
MTSIC_INSTANTIATE_RED(spatial_mean)
MTSIC_INSTANTIATE_RED(spatial_max)
MTSIC_INSTANTIATE_RED(spatial_std)
#undef MTSIC_INSTANTIATE_RED

template Tensor<float> softmax<float>(const Tensor<float>&, int, GradTape<float>*);
template Tensor<double> softmax<double>(const Tensor<double>&, int, GradTape<double>*);

}  // namespace mtsic

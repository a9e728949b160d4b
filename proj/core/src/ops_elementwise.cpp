#include <cmath>

#include "mtsic/ops.hpp"

namespace mtsic {
namespace {

// Shared skeleton for pointwise unary ops. fwd maps x_i to y_i; dfdx(x_i, y_i)
// is the local derivative used by the backward closure.
template <typename S, typename F, typename D>
Tensor<S> unary_pointwise(const Tensor<S>& x, GradTape<S>* tape, F fwd, D dfdx) {
  Tensor<S> y(x.shape());
  const S* xd = x.data();
  S* yd = y.data();
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) yd[i] = fwd(xd[i]);
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      auto xs = x.storage();
      auto ys = y.storage();
      int yn = tape->emit(n, [xs, ys, xn, n, dfdx](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        const S* xd = xs->data.data();
        const S* yd = ys->data.data();
        for (int64_t i = 0; i < n; ++i) gx[i] += g[i] * dfdx(xd[i], yd[i]);
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
std::vector<int> broadcast_out_shape(const Tensor<S>& a, const Tensor<S>& b, const char* name) {
  if (a.rank() != b.rank())
    throw std::invalid_argument(std::string(name) + ": rank mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  std::vector<int> out((size_t)a.rank());
  for (int i = 0; i < a.rank(); ++i) {
    int da = a.dim(i), db = b.dim(i);
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument(std::string(name) + ": incompatible shapes " +
                                  shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    out[(size_t)i] = da > db ? da : db;
  }
  return out;
}

// element strides with 0 on broadcast extents
inline std::vector<int64_t> broadcast_strides(const std::vector<int>& shape,
                                              const std::vector<int>& out) {
  std::vector<int64_t> s(shape.size());
  int64_t acc = 1;
  for (int i = (int)shape.size() - 1; i >= 0; --i) {
    s[(size_t)i] = shape[(size_t)i] == 1 && out[(size_t)i] != 1 ? 0 : acc;
    acc *= shape[(size_t)i];
  }
  return s;
}

// Pointwise binary op with numpy-style broadcasting (equal rank, extents match
// or are 1). dfda/dfdb give the partials at (a_i, b_i, y_i).
template <typename S, typename F, typename DA, typename DB>
Tensor<S> binary_pointwise(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape,
                           const char* name, F fwd, DA dfda, DB dfdb) {
  std::vector<int> oshape = broadcast_out_shape(a, b, name);
  Tensor<S> y(oshape);
  const S* ad = a.data();
  const S* bd = b.data();
  S* yd = y.data();
  const int64_t n = y.size();
  const bool same = a.shape() == b.shape();
  if (same) {
    for (int64_t i = 0; i < n; ++i) yd[i] = fwd(ad[i], bd[i]);
  } else {
    const int r = (int)oshape.size();
    std::vector<int64_t> sa = broadcast_strides(a.shape(), oshape);
    std::vector<int64_t> sb = broadcast_strides(b.shape(), oshape);
    std::vector<int> coord((size_t)r, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t io = 0; io < n; ++io) {
      yd[io] = fwd(ad[ia], bd[ib]);
      for (int d = r - 1; d >= 0; --d) {
        ++coord[(size_t)d];
        ia += sa[(size_t)d];
        ib += sb[(size_t)d];
        if (coord[(size_t)d] < oshape[(size_t)d]) break;
        coord[(size_t)d] = 0;
        ia -= (int64_t)oshape[(size_t)d] * sa[(size_t)d];
        ib -= (int64_t)oshape[(size_t)d] * sb[(size_t)d];
      }
    }
  }
  if (tape) {
    int an = tape->track(a);
    int bn = tape->track(b);
    if (an >= 0 || bn >= 0) {
      auto as = a.storage();
      auto bs = b.storage();
      auto ys = y.storage();
      std::vector<int> ashape = a.shape(), bshape = b.shape();
      int yn = tape->emit(
          n, [as, bs, ys, an, bn, n, same, oshape, ashape, bshape, dfda, dfdb](GradTape<S>& t,
                                                                               const S* g) {
            const S* ad = as->data.data();
            const S* bd = bs->data.data();
            const S* yd = ys->data.data();
            S* ga = an >= 0 ? t.grad_acc(an) : nullptr;
            S* gb = bn >= 0 ? t.grad_acc(bn) : nullptr;
            if (same) {
              for (int64_t i = 0; i < n; ++i) {
                if (ga) ga[i] += g[i] * dfda(ad[i], bd[i], yd[i]);
                if (gb) gb[i] += g[i] * dfdb(ad[i], bd[i], yd[i]);
              }
              return;
            }
            const int r = (int)oshape.size();
            std::vector<int64_t> sa = broadcast_strides(ashape, oshape);
            std::vector<int64_t> sb = broadcast_strides(bshape, oshape);
            std::vector<int> coord((size_t)r, 0);
            int64_t ia = 0, ib = 0;
            for (int64_t io = 0; io < n; ++io) {
              if (ga) ga[ia] += g[io] * dfda(ad[ia], bd[ib], yd[io]);
              if (gb) gb[ib] += g[io] * dfdb(ad[ia], bd[ib], yd[io]);
              for (int d = r - 1; d >= 0; --d) {
                ++coord[(size_t)d];
                ia += sa[(size_t)d];
                ib += sb[(size_t)d];
                if (coord[(size_t)d] < oshape[(size_t)d]) break;
                coord[(size_t)d] = 0;
                ia -= (int64_t)oshape[(size_t)d] * sa[(size_t)d];
                ib -= (int64_t)oshape[(size_t)d] * sb[(size_t)d];
              }
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

}  // namespace

template <typename S>
Tensor<S> relu(const Tensor<S>& x, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [](S v) { return v > S(0) ? v : S(0); },
      [](S v, S) { return v > S(0) ? S(1) : S(0); });
}

template <typename S>
Tensor<S> leaky_relu(const Tensor<S>& x, S slope, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [slope](S v) { return v > S(0) ? v : slope * v; },
      [slope](S v, S) { return v > S(0) ? S(1) : slope; });
}

template <typename S>
Tensor<S> gelu(const Tensor<S>& x, GradTape<S>* tape) {
  const S c = S(0.7978845608028654);  // sqrt(2/pi)
  const S a = S(0.044715);
  return unary_pointwise(
      x, tape,
      [c, a](S v) {
        S t = std::tanh(c * (v + a * v * v * v));
        return S(0.5) * v * (S(1) + t);
      },
      [c, a](S v, S) {
        S t = std::tanh(c * (v + a * v * v * v));
        S du = c * (S(1) + S(3) * a * v * v);
        return S(0.5) * (S(1) + t) + S(0.5) * v * (S(1) - t * t) * du;
      });
}

template <typename S>
Tensor<S> tanh_op(const Tensor<S>& x, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [](S v) { return std::tanh(v); }, [](S, S y) { return S(1) - y * y; });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape,
      [](S v) {
        return v >= S(0) ? S(1) / (S(1) + std::exp(-v))
                         : std::exp(v) / (S(1) + std::exp(v));
      },
      [](S, S y) { return y * (S(1) - y); });
}

template <typename S>
Tensor<S> softplus(const Tensor<S>& x, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape,
      [](S v) { return v > S(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](S v, S) {
        return v >= S(0) ? S(1) / (S(1) + std::exp(-v))
                         : std::exp(v) / (S(1) + std::exp(v));
      });
}

template <typename S>
Tensor<S> abs_op(const Tensor<S>& x, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [](S v) { return std::abs(v); },
      [](S v, S) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); });
}

template <typename S>
Tensor<S> sqrt_op(const Tensor<S>& x, GradTape<S>* tape) {
  // backward guarded at 0 so downstream eps guards see a clean 0, not a NaN
  return unary_pointwise(
      x, tape, [](S v) { return std::sqrt(v); },
      [](S, S y) { return S(0.5) / std::max(y, S(1e-12)); });
}

template <typename S>
Tensor<S> acos_op(const Tensor<S>& x, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [](S v) { return std::acos(v); },
      [](S v, S) { return S(-1) / std::sqrt(S(1) - v * v); });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& x, S a, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [a](S v) { return a * v; }, [a](S, S) { return a; });
}

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& x, S a, GradTape<S>* tape) {
  return unary_pointwise(
      x, tape, [a](S v) { return v + a; }, [](S, S) { return S(1); });
}

template <typename S>
Tensor<S> clamp(const Tensor<S>& x, S lo, S hi, GradTape<S>* tape) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must not exceed hi");
  // gradient passes only strictly inside the interval; this keeps saturating
  // compositions (clamp then acos at +/-1) finite
  return unary_pointwise(
      x, tape, [lo, hi](S v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](S v, S) { return v > lo && v < hi ? S(1) : S(0); });
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape) {
  return binary_pointwise(
      a, b, tape, "add", [](S u, S v) { return u + v; }, [](S, S, S) { return S(1); },
      [](S, S, S) { return S(1); });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape) {
  return binary_pointwise(
      a, b, tape, "sub", [](S u, S v) { return u - v; }, [](S, S, S) { return S(1); },
      [](S, S, S) { return S(-1); });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape) {
  return binary_pointwise(
      a, b, tape, "mul", [](S u, S v) { return u * v; }, [](S, S v, S) { return v; },
      [](S u, S, S) { return u; });
}

template <typename S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape) {
  return binary_pointwise(
      a, b, tape, "div", [](S u, S v) { return u / v; }, [](S, S v, S) { return S(1) / v; },
      [](S, S v, S y) { return -y / v; });
}

#define MTSIC_INSTANTIATE_UNARY(fn)                                   \
  template Tensor<float> fn<float>(const Tensor<float>&, GradTape<float>*); \
  template Tensor<double> fn<double>(const Tensor<double>&, GradTape<double>*);

MTSIC_INSTANTIATE_UNARY(relu)
MTSIC_INSTANTIATE_UNARY(gelu)
MTSIC_INSTANTIATE_UNARY(tanh_op)
MTSIC_INSTANTIATE_UNARY(sigmoid)
MTSIC_INSTANTIATE_UNARY(softplus)
MTSIC_INSTANTIATE_UNARY(abs_op)
MTSIC_INSTANTIATE_UNARY(sqrt_op)
MTSIC_INSTANTIATE_UNARY(acos_op)
#undef MTSIC_INSTANTIATE_UNARY

template Tensor<float> leaky_relu<float>(const Tensor<float>&, float, GradTape<float>*);
template Tensor<double> leaky_relu<double>(const Tensor<double>&, double, GradTape<double>*);
template Tensor<float> scale<float>(const Tensor<float>&, float, GradTape<float>*);
template Tensor<double> scale<double>(const Tensor<double>&, double, GradTape<double>*);
template Tensor<float> add_scalar<float>(const Tensor<float>&, float, GradTape<float>*);
template Tensor<double> add_scalar<double>(const Tensor<double>&, double, GradTape<double>*);
template Tensor<float> clamp<float>(const Tensor<float>&, float, float, GradTape<float>*);
template Tensor<double> clamp<double>(const Tensor<double>&, double, double, GradTape<double>*);

#define MTSIC_INSTANTIATE_BINARY(fn)                                                          \
  template Tensor<float> fn<float>(const Tensor<float>&, const Tensor<float>&, GradTape<float>*); \
  template Tensor<double> fn<double>(const Tensor<double>&, const Tensor<double>&, GradTape<double>*);

MTSIC_INSTANTIATE_BINARY(add)
MTSIC_INSTANTIATE_BINARY(sub)
MTSIC_INSTANTIATE_BINARY(mul)
MTSIC_INSTANTIATE_BINARY(div)
#undef MTSIC_INSTANTIATE_BINARY

}  // namespace mtsic

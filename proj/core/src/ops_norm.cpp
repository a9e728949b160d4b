#include <cmath>

#include "mtsic/ops.hpp"

namespace mtsic {

template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, S eps,
                     GradTape<S>* tape) {
  if (x.rank() != 3)
    throw std::invalid_argument("layer_norm: expected C x H x W, got " + shape_str(x.shape()));
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C)
    throw std::invalid_argument("layer_norm: affine params must be {C}");
  Tensor<S> y(x.shape());
  std::vector<S> xhat((size_t)x.size());
  std::vector<S> istd((size_t)hw);
  const S* xd = x.data();
  const S* gd = gamma.data();
  const S* bd = beta.data();
  S* yd = y.data();
  for (int64_t p = 0; p < hw; ++p) {
    S m = 0;
    for (int c = 0; c < C; ++c) m += xd[c * hw + p];
    m /= S(C);
    S v = 0;
    for (int c = 0; c < C; ++c) {
      const S d = xd[c * hw + p] - m;
      v += d * d;
    }
    v /= S(C);
    const S is = S(1) / std::sqrt(v + eps);
    istd[(size_t)p] = is;
    for (int c = 0; c < C; ++c) {
      const S h = (xd[c * hw + p] - m) * is;
      xhat[(size_t)(c * hw + p)] = h;
      yd[c * hw + p] = gd[c] * h + bd[c];
    }
  }
  if (tape) {
    int xn = tape->track(x);
    int gn = tape->track(gamma);
    int bn = tape->track(beta);
    if (xn >= 0 || gn >= 0 || bn >= 0) {
      auto gs = gamma.storage();
      int yn = tape->emit(
          x.size(), [gs, xn, gn, bn, C, hw, xhat = std::move(xhat),
                     istd = std::move(istd)](GradTape<S>& t, const S* g) {
            const S* gd = gs->data.data();
            if (bn >= 0) {
              S* gb = t.grad_acc(bn);
              for (int c = 0; c < C; ++c) {
                S acc = 0;
                for (int64_t p = 0; p < hw; ++p) acc += g[c * hw + p];
                gb[c] += acc;
              }
            }
            if (gn >= 0) {
              S* gg = t.grad_acc(gn);
              for (int c = 0; c < C; ++c) {
                S acc = 0;
                for (int64_t p = 0; p < hw; ++p) acc += g[c * hw + p] * xhat[(size_t)(c * hw + p)];
                gg[c] += acc;
              }
            }
            if (xn >= 0) {
              S* gx = t.grad_acc(xn);
              for (int64_t p = 0; p < hw; ++p) {
                S m1 = 0, m2 = 0;
                for (int c = 0; c < C; ++c) {
                  const S gh = g[c * hw + p] * gd[c];
                  m1 += gh;
                  m2 += gh * xhat[(size_t)(c * hw + p)];
                }
                m1 /= S(C);
                m2 /= S(C);
                for (int c = 0; c < C; ++c) {
                  const S gh = g[c * hw + p] * gd[c];
                  gx[c * hw + p] +=
                      (gh - m1 - xhat[(size_t)(c * hw + p)] * m2) * istd[(size_t)p];
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
Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     Tensor<S>& running_mean, Tensor<S>& running_var, S momentum, S eps,
                     bool training, GradTape<S>* tape) {
  if (x.rank() != 3)
    throw std::invalid_argument("batch_norm: expected C x H x W, got " + shape_str(x.shape()));
  const int C = x.dim(0);
  const int64_t hw = (int64_t)x.dim(1) * x.dim(2);
  if (gamma.dim(0) != C || beta.dim(0) != C || running_mean.dim(0) != C ||
      running_var.dim(0) != C)
    throw std::invalid_argument("batch_norm: per-channel params must be {C}");
  Tensor<S> y(x.shape());
  std::vector<S> xhat((size_t)x.size());
  std::vector<S> istd((size_t)C);
  const S* xd = x.data();
  const S* gd = gamma.data();
  const S* bd = beta.data();
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    S m, v;
    if (training) {
      m = 0;
      for (int64_t p = 0; p < hw; ++p) m += xd[c * hw + p];
      m /= S(hw);
      v = 0;
      for (int64_t p = 0; p < hw; ++p) {
        const S d = xd[c * hw + p] - m;
        v += d * d;
      }
      v /= S(hw);  // population statistics, also pushed into the running buffers
      running_mean.data()[c] = (S(1) - momentum) * running_mean.data()[c] + momentum * m;
      running_var.data()[c] = (S(1) - momentum) * running_var.data()[c] + momentum * v;
    } else {
      m = running_mean.data()[c];
      v = running_var.data()[c];
    }
    const S is = S(1) / std::sqrt(v + eps);
    istd[(size_t)c] = is;
    for (int64_t p = 0; p < hw; ++p) {
      const S h = (xd[c * hw + p] - m) * is;
      xhat[(size_t)(c * hw + p)] = h;
      yd[c * hw + p] = gd[c] * h + bd[c];
    }
  }
  if (tape) {
    int xn = tape->track(x);
    int gn = tape->track(gamma);
    int bn = tape->track(beta);
    if (xn >= 0 || gn >= 0 || bn >= 0) {
      auto gs = gamma.storage();
      int yn = tape->emit(
          x.size(), [gs, xn, gn, bn, C, hw, training, xhat = std::move(xhat),
                     istd = std::move(istd)](GradTape<S>& t, const S* g) {
            const S* gd = gs->data.data();
            if (bn >= 0) {
              S* gb = t.grad_acc(bn);
              for (int c = 0; c < C; ++c) {
                S acc = 0;
                for (int64_t p = 0; p < hw; ++p) acc += g[c * hw + p];
                gb[c] += acc;
              }
            }
            if (gn >= 0) {
              S* gg = t.grad_acc(gn);
              for (int c = 0; c < C; ++c) {
                S acc = 0;
                for (int64_t p = 0; p < hw; ++p) acc += g[c * hw + p] * xhat[(size_t)(c * hw + p)];
                gg[c] += acc;
              }
            }
            if (xn >= 0) {
              S* gx = t.grad_acc(xn);
              for (int c = 0; c < C; ++c) {
                if (training) {
                  S m1 = 0, m2 = 0;
                  for (int64_t p = 0; p < hw; ++p) {
                    m1 += g[c * hw + p];
                    m2 += g[c * hw + p] * xhat[(size_t)(c * hw + p)];
                  }
                  m1 /= S(hw);
                  m2 /= S(hw);
                  for (int64_t p = 0; p < hw; ++p)
                    gx[c * hw + p] += gd[c] * istd[(size_t)c] *
                                      (g[c * hw + p] - m1 - xhat[(size_t)(c * hw + p)] * m2);
                } else {
                  for (int64_t p = 0; p < hw; ++p)
                    gx[c * hw + p] += g[c * hw + p] * gd[c] * istd[(size_t)c];
                }
              }
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

template Tensor<float> layer_norm<float>(const Tensor<float>&, const Tensor<float>&,
                                         const Tensor<float>&, float, GradTape<float>*);
template Tensor<double> layer_norm<double>(const Tensor<double>&, const Tensor<double>&,
                                           const Tensor<double>&, double, GradTape<double>*);
template Tensor<float> batch_norm<float>(const Tensor<float>&, const Tensor<float>&,
                                         const Tensor<float>&, Tensor<float>&, Tensor<float>&,
                                         float, float, bool, GradTape<float>*);
template Tensor<double> batch_norm<double>(const Tensor<double>&, const Tensor<double>&,
                                           const Tensor<double>&, Tensor<double>&, Tensor<double>&,
                                           double, double, bool, GradTape<double>*);

}  // namespace mtsic

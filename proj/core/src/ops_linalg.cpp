#include <Eigen/Core>

#include "mtsic/ops.hpp"

namespace mtsic {
namespace {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using CMap = Eigen::Map<const MatX<S>>;
template <typename S>
using Map = Eigen::Map<MatX<S>>;

}  // namespace

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b, bool trans_a, bool trans_b,
                 GradTape<S>* tape) {
  if (a.rank() != 2 || b.rank() != 2)
    throw std::invalid_argument("matmul: expected 2-D operands, got " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  const int m = trans_a ? a.dim(1) : a.dim(0);
  const int k = trans_a ? a.dim(0) : a.dim(1);
  const int kb = trans_b ? b.dim(1) : b.dim(0);
  const int n = trans_b ? b.dim(0) : b.dim(1);
  if (k != kb)
    throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                                (trans_a ? "^T" : "") + " . " + shape_str(b.shape()) +
                                (trans_b ? "^T" : ""));
  Tensor<S> y({m, n});
  {
    CMap<S> A(a.data(), a.dim(0), a.dim(1));
    CMap<S> B(b.data(), b.dim(0), b.dim(1));
    Map<S> Y(y.data(), m, n);
    if (!trans_a && !trans_b)
      Y.noalias() = A * B;
    else if (trans_a && !trans_b)
      Y.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b)
      Y.noalias() = A * B.transpose();
    else
      Y.noalias() = A.transpose() * B.transpose();
  }
  if (tape) {
    int an = tape->track(a);
    int bn = tape->track(b);
    if (an >= 0 || bn >= 0) {
      auto as = a.storage();
      auto bs = b.storage();
      const int ar = a.dim(0), ac = a.dim(1), br = b.dim(0), bc = b.dim(1);
      int yn = tape->emit(
          (int64_t)m * n,
          [as, bs, an, bn, ar, ac, br, bc, m, n, trans_a, trans_b](GradTape<S>& t, const S* g) {
            CMap<S> A(as->data.data(), ar, ac);
            CMap<S> B(bs->data.data(), br, bc);
            CMap<S> G(g, m, n);
            if (an >= 0) {
              Map<S> GA(t.grad_acc(an), ar, ac);
              if (!trans_a && !trans_b)
                GA.noalias() += G * B.transpose();
              else if (!trans_a && trans_b)
                GA.noalias() += G * B;
              else if (trans_a && !trans_b)
                GA.noalias() += B * G.transpose();
              else
                GA.noalias() += B.transpose() * G.transpose();
            }
            if (bn >= 0) {
              Map<S> GB(t.grad_acc(bn), br, bc);
              if (!trans_a && !trans_b)
                GB.noalias() += A.transpose() * G;
              else if (trans_a && !trans_b)
                GB.noalias() += A * G;
              else if (!trans_a && trans_b)
                GB.noalias() += G.transpose() * A;
              else
                GB.noalias() += G.transpose() * A.transpose();
            }
          });
      y.bind(tape, yn);
    }
  }
  return y;
}

template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, GradTape<S>* tape) {
  if (x.rank() != 1 || w.rank() != 2 || w.dim(1) != x.dim(0))
    throw std::invalid_argument("linear: w " + shape_str(w.shape()) + " does not act on x " +
                                shape_str(x.shape()));
  if (b.defined() && (b.rank() != 1 || b.dim(0) != w.dim(0)))
    throw std::invalid_argument("linear: bias shape " + shape_str(b.shape()));
  const int m = w.dim(0), n = w.dim(1);
  Tensor<S> y({m});
  const S* xd = x.data();
  const S* wd = w.data();
  S* yd = y.data();
  for (int r = 0; r < m; ++r) {
    S acc = b.defined() ? b.data()[r] : S(0);
    const S* row = wd + (int64_t)r * n;
    for (int c = 0; c < n; ++c) acc += row[c] * xd[c];
    yd[r] = acc;
  }
  if (tape) {
    int xn = tape->track(x);
    int wn = tape->track(w);
    int bn = b.defined() ? tape->track(b) : -1;
    if (xn >= 0 || wn >= 0 || bn >= 0) {
      auto xs = x.storage();
      auto ws = w.storage();
      int yn = tape->emit(m, [xs, ws, xn, wn, bn, m, n](GradTape<S>& t, const S* g) {
        const S* xd = xs->data.data();
        const S* wd = ws->data.data();
        if (bn >= 0) {
          S* gb = t.grad_acc(bn);
          for (int r = 0; r < m; ++r) gb[r] += g[r];
        }
        if (wn >= 0) {
          S* gw = t.grad_acc(wn);
          for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) gw[(int64_t)r * n + c] += g[r] * xd[c];
        }
        if (xn >= 0) {
          S* gx = t.grad_acc(xn);
          for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) gx[c] += g[r] * wd[(int64_t)r * n + c];
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template Tensor<float> matmul<float>(const Tensor<float>&, const Tensor<float>&, bool, bool,
                                     GradTape<float>*);
template Tensor<double> matmul<double>(const Tensor<double>&, const Tensor<double>&, bool, bool,
                                       GradTape<double>*);
template Tensor<float> linear<float>(const Tensor<float>&, const Tensor<float>&,
                                     const Tensor<float>&, GradTape<float>*);
template Tensor<double> linear<double>(const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<double>&, GradTape<double>*);

}  // namespace mtsic

#include <cmath>

#include "mtsic/ops.hpp"

namespace mtsic {
namespace {

struct DftTables {
  std::vector<double> cos_h, sin_h, cos_w, sin_w;
  int H = 0, W = 0;

  DftTables(int H_, int W_) : H(H_), W(W_) {
    const double tau = 6.283185307179586476925286766559;
    cos_h.resize((size_t)H * H);
    sin_h.resize((size_t)H * H);
    for (int k = 0; k < H; ++k)
      for (int n = 0; n < H; ++n) {
        const double th = tau * ((double)((int64_t)k * n % H)) / H;
        cos_h[(size_t)(k * H + n)] = std::cos(th);
        sin_h[(size_t)(k * H + n)] = std::sin(th);
      }
    cos_w.resize((size_t)W * W);
    sin_w.resize((size_t)W * W);
    for (int k = 0; k < W; ++k)
      for (int n = 0; n < W; ++n) {
        const double th = tau * ((double)((int64_t)k * n % W)) / W;
        cos_w[(size_t)(k * W + n)] = std::cos(th);
        sin_w[(size_t)(k * W + n)] = std::sin(th);
      }
  }
};

// Unnormalized 2-D DFT of one real channel (exp(-i 2 pi ...) convention),
// factored through rows then columns, accumulating in double.
template <typename S>
void dft2_channel(const S* x, const DftTables& tb, double* out_re, double* out_im) {
  const int H = tb.H, W = tb.W;
  std::vector<double> tmp_re((size_t)H * W), tmp_im((size_t)H * W);
  for (int h = 0; h < H; ++h) {
    for (int kw = 0; kw < W; ++kw) {
      double re = 0, im = 0;
      for (int w = 0; w < W; ++w) {
        const double v = (double)x[(int64_t)h * W + w];
        re += v * tb.cos_w[(size_t)(kw * W + w)];
        im -= v * tb.sin_w[(size_t)(kw * W + w)];
      }
      tmp_re[(size_t)(h * W + kw)] = re;
      tmp_im[(size_t)(h * W + kw)] = im;
    }
  }
  for (int kh = 0; kh < H; ++kh) {
    for (int kw = 0; kw < W; ++kw) {
      double re = 0, im = 0;
      for (int h = 0; h < H; ++h) {
        const double a = tmp_re[(size_t)(h * W + kw)];
        const double b = tmp_im[(size_t)(h * W + kw)];
        const double c = tb.cos_h[(size_t)(kh * H + h)];
        const double s = tb.sin_h[(size_t)(kh * H + h)];
        re += a * c + b * s;
        im += b * c - a * s;
      }
      out_re[(int64_t)kh * W + kw] = re;
      out_im[(int64_t)kh * W + kw] = im;
    }
  }
}

}  // namespace

template <typename S>
Fft2Pair<S> fft2(const Tensor<S>& x, GradTape<S>* tape) {
  if (x.rank() != 2 && x.rank() != 3)
    throw std::invalid_argument("fft2: expected {H,W} or {C,H,W}, got " + shape_str(x.shape()));
  const int C = x.rank() == 3 ? x.dim(0) : 1;
  const int H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const int64_t hw = (int64_t)H * W;
  DftTables tb(H, W);
  Fft2Pair<S> out{Tensor<S>(x.shape()), Tensor<S>(x.shape())};
  {
    std::vector<double> re((size_t)hw), im((size_t)hw);
    for (int c = 0; c < C; ++c) {
      dft2_channel(x.data() + c * hw, tb, re.data(), im.data());
      for (int64_t p = 0; p < hw; ++p) {
        out.re.data()[c * hw + p] = S(re[(size_t)p]);
        out.im.data()[c * hw + p] = S(im[(size_t)p]);
      }
    }
  }
  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      // The DFT matrix is symmetric, so the adjoint of "take the real part"
      // is the real part of the same transform applied to the gradient (and
      // likewise for the imaginary part).
      auto tbp = std::make_shared<DftTables>(std::move(tb));
      int rn = tape->emit(x.size(), [xn, C, hw, tbp](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        std::vector<double> re((size_t)hw), im((size_t)hw);
        for (int c = 0; c < C; ++c) {
          dft2_channel(g + c * hw, *tbp, re.data(), im.data());
          for (int64_t p = 0; p < hw; ++p) gx[c * hw + p] += S(re[(size_t)p]);
        }
      });
      out.re.bind(tape, rn);
      int in = tape->emit(x.size(), [xn, C, hw, tbp](GradTape<S>& t, const S* g) {
        S* gx = t.grad_acc(xn);
        std::vector<double> re((size_t)hw), im((size_t)hw);
        for (int c = 0; c < C; ++c) {
          dft2_channel(g + c * hw, *tbp, re.data(), im.data());
          for (int64_t p = 0; p < hw; ++p) gx[c * hw + p] += S(im[(size_t)p]);
        }
      });
      out.im.bind(tape, in);
    }
  }
  return out;
}

template Fft2Pair<float> fft2<float>(const Tensor<float>&, GradTape<float>*);
template Fft2Pair<double> fft2<double>(const Tensor<double>&, GradTape<double>*);

}  // namespace mtsic

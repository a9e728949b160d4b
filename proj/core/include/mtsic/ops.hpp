#pragma once

#include <vector>

#include "mtsic/tensor.hpp"

// Differentiable op suite. Every op takes an optional GradTape*; pass nullptr
// for a plain forward evaluation. Image-like tensors are C x H x W row-major.

namespace mtsic {

// ---- elementwise, unary ----
template <typename S> Tensor<S> relu(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> leaky_relu(const Tensor<S>& x, S slope, GradTape<S>* tape = nullptr);
// tanh-form GELU approximation
template <typename S> Tensor<S> gelu(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> tanh_op(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> sigmoid(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> softplus(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> abs_op(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> sqrt_op(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> acos_op(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> scale(const Tensor<S>& x, S a, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> add_scalar(const Tensor<S>& x, S a, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> clamp(const Tensor<S>& x, S lo, S hi, GradTape<S>* tape = nullptr);

// ---- elementwise, binary with broadcasting ----
// Operands must have equal rank; each extent must match or be 1 on one side.
template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b, GradTape<S>* tape = nullptr);

// ---- reductions ----
template <typename S> Tensor<S> sum_all(const Tensor<S>& x, GradTape<S>* tape = nullptr);   // -> {1}
template <typename S> Tensor<S> mean_all(const Tensor<S>& x, GradTape<S>* tape = nullptr);  // -> {1}
// C x H x W -> 1 x H x W
template <typename S> Tensor<S> channel_sum(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> channel_mean(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> channel_max(const Tensor<S>& x, GradTape<S>* tape = nullptr);
// C x H x W -> {C}; spatial_std is the population standard deviation, exact 0
// for a constant channel, with the backward guarded by max(std, 1e-12)
template <typename S> Tensor<S> spatial_mean(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> spatial_max(const Tensor<S>& x, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> spatial_std(const Tensor<S>& x, GradTape<S>* tape = nullptr);

// softmax along one axis of an arbitrary-rank tensor (max-subtracted)
template <typename S> Tensor<S> softmax(const Tensor<S>& x, int axis, GradTape<S>* tape = nullptr);

// ---- shape ----
template <typename S> Tensor<S> concat_channels(const std::vector<Tensor<S>>& xs, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> slice_channels(const Tensor<S>& x, int c0, int c1, GradTape<S>* tape = nullptr);
// half-open spatial window [r0, r1) x [c0, c1)
template <typename S> Tensor<S> crop_spatial(const Tensor<S>& x, int r0, int r1, int c0, int c1, GradTape<S>* tape = nullptr);
// zero-pads the spatial extent; the adjoint of crop_spatial
template <typename S> Tensor<S> pad_spatial(const Tensor<S>& x, int top, int bottom, int left, int right, GradTape<S>* tape = nullptr);

// ---- dense linear algebra ----
// op(a) . op(b) on 2-D tensors, where op optionally transposes
template <typename S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b, bool trans_a = false,
                                       bool trans_b = false, GradTape<S>* tape = nullptr);
// w {m,n} . x {n} + b {m}; pass an undefined bias to skip it
template <typename S> Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                                       GradTape<S>* tape = nullptr);

// ---- convolution ----
struct ConvSpec {
  int stride = 1;
  int pad = 0;
  int dilation = 1;
  int groups = 1;
  // per-axis padding; -1 falls back to the symmetric pad above
  int pad_h = -1;
  int pad_w = -1;
  int ph() const { return pad_h >= 0 ? pad_h : pad; }
  int pw() const { return pad_w >= 0 ? pad_w : pad; }
};

// x {C,H,W}, w {O,C/groups,kh,kw}, b {O} or undefined
template <typename S> Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                                       const ConvSpec& spec = {}, GradTape<S>* tape = nullptr);
// x {C,H,W}, w {C,O,kh,kw}, b {O} or undefined; zero padding, output
// (H-1)*stride + kh so a 2x2 kernel with stride 2 exactly doubles H and W
template <typename S> Tensor<S> conv_transpose2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                                                 int stride, GradTape<S>* tape = nullptr);

// directional depthwise strip convolution: 9 taps at offsets t*(dy,dx) for
// t in -4..4, zero padded, shape preserved; kernel is {C,9}
enum class StripDir { diag45, horiz, diag135 };  // (dy,dx) = (-1,1), (0,1), (1,1)
template <typename S> Tensor<S> strip_conv2d(const Tensor<S>& x, const Tensor<S>& k, StripDir dir,
                                             GradTape<S>* tape = nullptr);

// ---- normalization ----
// normalizes across channels at each spatial position; gamma/beta are {C}
template <typename S> Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                                           S eps, GradTape<S>* tape = nullptr);
// per-channel batch norm over the spatial extent; running stats are updated
// in place when training is true and used instead of batch stats otherwise
template <typename S> Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                                           Tensor<S>& running_mean, Tensor<S>& running_var, S momentum, S eps,
                                           bool training, GradTape<S>* tape = nullptr);

// ---- pooling and resampling ----
// stride-1 same-size pooling over k x k windows clamped at the borders;
// avg divides by the actual window population
template <typename S> Tensor<S> max_pool_same(const Tensor<S>& x, int k, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> avg_pool_same(const Tensor<S>& x, int k, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> resize_bilinear(const Tensor<S>& x, int out_h, int out_w, GradTape<S>* tape = nullptr);
template <typename S> Tensor<S> resize_nearest(const Tensor<S>& x, int out_h, int out_w, GradTape<S>* tape = nullptr);

// ---- Fourier ----
template <typename S>
struct Fft2Pair {
  Tensor<S> re;
  Tensor<S> im;
};
// unnormalized 2-D DFT of each channel of {C,H,W} (or of a single {H,W} map)
template <typename S> Fft2Pair<S> fft2(const Tensor<S>& x, GradTape<S>* tape = nullptr);

}  // namespace mtsic

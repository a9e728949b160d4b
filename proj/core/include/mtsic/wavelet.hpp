#pragma once

#include "mtsic/tensor.hpp"

// Single-level 2-D Haar analysis/synthesis with orthonormal scaling, so the
// transform preserves total squared energy and the synthesis is the exact
// adjoint (and inverse) of the analysis.

namespace mtsic {

template <typename S>
struct WaveletPyramid {
  Tensor<S> ll;  // low-low approximation
  Tensor<S> lh;  // horizontal detail
  Tensor<S> hl;  // vertical detail
  Tensor<S> hh;  // diagonal detail
};

// x {C,H,W} with even H and W -> four {C,H/2,W/2} subbands; per 2x2 block
// [a b; c d]: ll=(a+b+c+d)/2, lh=(a-b+c-d)/2, hl=(a+b-c-d)/2, hh=(a-b-c+d)/2
template <typename S>
WaveletPyramid<S> haar_dwt2(const Tensor<S>& x, GradTape<S>* tape = nullptr);

// exact inverse of haar_dwt2
template <typename S>
Tensor<S> haar_idwt2(const WaveletPyramid<S>& p, GradTape<S>* tape = nullptr);

extern template struct WaveletPyramid<float>;
extern template struct WaveletPyramid<double>;

}  // namespace mtsic

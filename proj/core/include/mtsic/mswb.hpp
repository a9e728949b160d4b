#pragma once

#include <string>

#include "mtsic/layers.hpp"
#include "mtsic/wavelet.hpp"

// Multi-scale wavelet block: a CBAM-gated global branch, an SPP local branch,
// and a Haar frequency branch, cross-fused at half resolution by the
// spatial-frequency feature fusion module and returned through a global skip.

namespace mtsic {

template <typename S>
struct CbamParams {
  Mlp<S> mlp;            // dim -> dim/8 -> dim, shared by the avg and max paths
  ConvLayer<S> spatial;  // 7x7, 2 -> 1
};

template <typename S>
CbamParams<S> make_cbam(ParamSet<S>& ps, const std::string& name, int dim, Rng& rng);

// x * sigmoid(MLP(avgpool) + MLP(maxpool)) gated again by the 7x7 spatial map
template <typename S>
Tensor<S> cbam(const Tensor<S>& x, const CbamParams<S>& p, GradTape<S>* tape = nullptr);

template <typename S>
struct SffmParams {
  LnAffine<S> ln0, ln1;
  Tensor<S> strip0[3], strip1[3];      // {dim,9} per direction, one set per input
  ConvLayer<S> asym_a[3], asym_b[3];   // depthwise 1xk then kx1, k in {7,11,21}
  ConvLayer<S> fuse[3];                // 1x1 dim->dim per direction
  ConvLayer<S> cat_fuse;               // 1x1 3dim->dim
  ConvLayer<S> sq0, sq1;               // 3x3 square convs on the raw inputs
};

template <typename S>
SffmParams<S> make_sffm(ParamSet<S>& ps, const std::string& name, int dim, Rng& rng);

// y_spatial {dim,H,W} is bilinearly halved inside, y_freq is {dim,H/2,W/2};
// direction/scale pairings are (45deg,7), (0deg,11), (135deg,21)
template <typename S>
Tensor<S> sffm(const Tensor<S>& y_spatial, const Tensor<S>& y_freq, const SffmParams<S>& p,
               GradTape<S>* tape = nullptr);

template <typename S>
struct MswbParams {
  CbamParams<S> cbam;
  LnAffine<S> spp_ln;
  ConvLayer<S> spp_fuse;  // 1x1 4dim->dim
  CbrBlock<S> cbr_global, cbr_local, cbr_low, cbr_high;
  ConvLayer<S> high_fuse;  // 1x1 3dim->dim over the detail subbands
  SffmParams<S> sffm_gl, sffm_lh;
  ConvLayer<S> out_fuse;  // 1x1 2dim->dim
};

template <typename S>
MswbParams<S> make_mswb(ParamSet<S>& ps, const std::string& name, int dim, Rng& rng);

// with every learnable parameter zeroed this is exactly the identity: only
// the global skip survives
template <typename S>
Tensor<S> mswb_forward(const Tensor<S>& y, MswbParams<S>& p, bool training,
                       GradTape<S>* tape = nullptr);

}  // namespace mtsic

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtsic/layers.hpp"

// Spectral multi-head self-attention and the spatial-spectral attention
// residual block. Feature maps are dim x H x W; attention for the spectral
// variant runs along the channel axis, so each spectral map is one token and
// its cost is linear in the spatial extent.

namespace mtsic {

enum class AttentionKind { smsa, gmsa, wmsa, swmsa };

template <typename S>
struct SmsaParams {
  int dim = 0;
  int head_width = 0;  // heads = dim / head_width
  Tensor<S> wq, wk, wv, w_out;  // {dim,dim}
  Tensor<S> sigma;              // {heads} per-head logit scale
  Tensor<S> sigma_global;       // {1} scale for the full-width value branch
  ConvLayer<S> pos1, pos2;      // depthwise 3x3 position-encoding convs
  int heads() const { return head_width > 0 ? dim / head_width : 0; }
};

template <typename S>
SmsaParams<S> make_smsa(ParamSet<S>& ps, const std::string& name, int dim, int head_width,
                        Rng& rng);

// y {dim,H,W} -> {dim,H,W}; pos_enc=false drops the depthwise position term
// (used by the permutation-equivariance checks)
template <typename S>
Tensor<S> smsa_forward(const Tensor<S>& y, const SmsaParams<S>& p, GradTape<S>* tape = nullptr,
                       bool pos_enc = true);

// spatial attention alternatives sharing SmsaParams. gmsa attends across all
// HW tokens; wmsa within M x M windows; swmsa shifts the windows by M/2 with
// a toroidal roll before attending and rolls back after.
template <typename S>
Tensor<S> attention_alternative(const Tensor<S>& y, const SmsaParams<S>& p, AttentionKind kind,
                                int window, GradTape<S>* tape = nullptr, bool pos_enc = true);

// forward-only diagnostic: the heads() per-head attention matrices
// {head_width, head_width} followed by the global {dim,dim} matrix; every
// column of each matrix is a distribution over the key axis
template <typename S>
std::vector<Tensor<S>> smsa_attention_matrices(const Tensor<S>& y, const SmsaParams<S>& p);

// analytic multiply-accumulate counts for the attention core plus projections
// and position encoding
int64_t smsa_flops(int h, int w, int dim, int head_width);
int64_t gmsa_flops(int h, int w, int dim);
int64_t wmsa_flops(int h, int w, int dim, int window);

template <typename S>
struct SarbParams {
  ConvLayer<S> res1, res2;  // 3x3 residual pair
  LnAffine<S> ln1, ln2;
  SmsaParams<S> smsa;
  ConvLayer<S> ffn_expand;  // 1x1, c -> 4c
  ConvLayer<S> ffn_dw;      // depthwise 3x3 on 4c
  ConvLayer<S> ffn_proj;    // 1x1, 4c -> c
  AttentionKind kind = AttentionKind::smsa;
  int window = 8;
};

template <typename S>
SarbParams<S> make_sarb(ParamSet<S>& ps, const std::string& name, int ch, int head_width,
                        Rng& rng, AttentionKind kind = AttentionKind::smsa, int window = 8);

template <typename S>
Tensor<S> sarb_forward(const Tensor<S>& y, const SarbParams<S>& p, GradTape<S>* tape = nullptr);

}  // namespace mtsic

#pragma once

#include <string>
#include <vector>

#include "mtsic/attention.hpp"
#include "mtsic/mswb.hpp"

// The colorization generator: a 4-scale mini backbone lifting the spectral
// cube to a fused feature map, Ns cascaded U-shaped STformer stages with
// local skips, and a tanh head behind a global skip.

namespace mtsic {

template <typename S>
struct BackboneParams {
  CbrBlock<S> stem;                 // L -> C at full resolution
  CbrBlock<S> down1, down2, down3;  // C -> 2C -> 4C -> 8C, halving each time
  ConvLayer<S> fuse;                // 1x1, 15C -> dim
};

template <typename S>
struct StformerParams {
  ConvLayer<S> embed;  // 3x3
  SarbParams<S> enc0a, enc0b;
  ConvLayer<S> down0;  // 4x4 stride 2, dim -> 2dim
  SarbParams<S> enc1a, enc1b;
  ConvLayer<S> down1;  // 4x4 stride 2, 2dim -> 4dim
  SarbParams<S> enc2a, enc2b;
  MswbParams<S> bottleneck;
  ConvTLayer<S> up1;   // 2x2 stride 2, 4dim -> 2dim
  DsConv1x1<S> fuse1;  // 4dim -> 2dim after the skip concat
  SarbParams<S> dec1a, dec1b;
  ConvTLayer<S> up0;   // 2x2 stride 2, 2dim -> dim
  DsConv1x1<S> fuse0;  // 2dim -> dim
  SarbParams<S> dec0a, dec0b;
  ConvLayer<S> mapping;  // 3x3
};

template <typename S>
struct MtsicParams {
  int bands = 0, base = 0, dim = 0, stages_n = 0, head_width = 0;
  BackboneParams<S> backbone;
  std::vector<StformerParams<S>> stages;
  std::vector<Tensor<S>> stage_skip;  // {1} scalar per stage, init 1
  ConvLayer<S> global_proj;           // 1x1 on the backbone features
  ConvLayer<S> head;                  // 3x3, dim -> 3
};

template <typename S>
BackboneParams<S> make_backbone(ParamSet<S>& ps, const std::string& name, int bands, int base,
                                int dim, Rng& rng);
template <typename S>
StformerParams<S> make_stformer(ParamSet<S>& ps, const std::string& name, int dim,
                                int head_width, Rng& rng,
                                AttentionKind kind = AttentionKind::smsa, int window = 8);
template <typename S>
MtsicParams<S> make_mtsic(ParamSet<S>& ps, int bands, int base, int dim, int stages_n,
                          int head_width, Rng& rng,
                          AttentionKind kind = AttentionKind::smsa, int window = 8);

// cube {L,H,W} with H,W divisible by 8 -> fused features {dim,H,W}
template <typename S>
Tensor<S> backbone_forward(const Tensor<S>& cube, BackboneParams<S>& p, bool training,
                           GradTape<S>* tape = nullptr);

// {dim,H,W} -> {dim,H,W}, H,W divisible by 4 (and by 8 for the bottleneck)
template <typename S>
Tensor<S> stformer_forward(const Tensor<S>& f, StformerParams<S>& p, bool training,
                           GradTape<S>* tape = nullptr);

// cube {L,H,W} -> rgb {3,H,W} in [-1,1]
template <typename S>
Tensor<S> mtsic_forward(const Tensor<S>& cube, MtsicParams<S>& p, bool training,
                        GradTape<S>* tape = nullptr);

}  // namespace mtsic

#include "mtsic/generator.hpp"

#include <stdexcept>

namespace mtsic {

template <typename S>
BackboneParams<S> make_backbone(ParamSet<S>& ps, const std::string& name, int bands, int base,
                                int dim, Rng& rng) {
  BackboneParams<S> p;
  p.stem = make_cbr(ps, name + ".stem", bands, base, 3, 1, rng);
  p.down1 = make_cbr(ps, name + ".down1", base, 2 * base, 3, 2, rng);
  p.down2 = make_cbr(ps, name + ".down2", 2 * base, 4 * base, 3, 2, rng);
  p.down3 = make_cbr(ps, name + ".down3", 4 * base, 8 * base, 3, 2, rng);
  p.fuse = make_conv(ps, name + ".fuse", 15 * base, dim, 1, 1, ConvSpec{}, rng, true);
  return p;
}

template <typename S>
Tensor<S> backbone_forward(const Tensor<S>& cube, BackboneParams<S>& p, bool training,
                           GradTape<S>* tape) {
  if (cube.rank() != 3)
    throw std::invalid_argument("backbone_forward: expected L x H x W, got " +
                                shape_str(cube.shape()));
  const int H = cube.dim(1), W = cube.dim(2);
  if (H % 8 != 0 || W % 8 != 0)
    throw std::invalid_argument("backbone_forward: extents must be divisible by 8, got " +
                                shape_str(cube.shape()));
  Tensor<S> x1 = p.stem(cube, training, tape);
  Tensor<S> x2 = p.down1(x1, training, tape);
  Tensor<S> x3 = p.down2(x2, training, tape);
  Tensor<S> x4 = p.down3(x3, training, tape);
  std::vector<Tensor<S>> pyramid = {x1, resize_bilinear(x2, H, W, tape),
                                    resize_bilinear(x3, H, W, tape),
                                    resize_bilinear(x4, H, W, tape)};
  return p.fuse(concat_channels(pyramid, tape), tape);
}

template <typename S>
StformerParams<S> make_stformer(ParamSet<S>& ps, const std::string& name, int dim,
                                int head_width, Rng& rng, AttentionKind kind, int window) {
  StformerParams<S> p;
  ConvSpec s3;
  s3.pad = 1;
  p.embed = make_conv(ps, name + ".embed", dim, dim, 3, 3, s3, rng, true);
  p.enc0a = make_sarb(ps, name + ".enc0a", dim, head_width, rng, kind, window);
  p.enc0b = make_sarb(ps, name + ".enc0b", dim, head_width, rng, kind, window);
  ConvSpec s42;
  s42.stride = 2;
  s42.pad = 1;
  p.down0 = make_conv(ps, name + ".down0", dim, 2 * dim, 4, 4, s42, rng, true);
  p.enc1a = make_sarb(ps, name + ".enc1a", 2 * dim, head_width, rng, kind, window);
  p.enc1b = make_sarb(ps, name + ".enc1b", 2 * dim, head_width, rng, kind, window);
  p.down1 = make_conv(ps, name + ".down1", 2 * dim, 4 * dim, 4, 4, s42, rng, true);
  p.enc2a = make_sarb(ps, name + ".enc2a", 4 * dim, head_width, rng, kind, window);
  p.enc2b = make_sarb(ps, name + ".enc2b", 4 * dim, head_width, rng, kind, window);
  p.bottleneck = make_mswb(ps, name + ".mswb", 4 * dim, rng);
  p.up1 = make_conv_t(ps, name + ".up1", 4 * dim, 2 * dim, 2, 2, rng);
  p.fuse1 = make_dsconv1x1(ps, name + ".fuse1", 4 * dim, 2 * dim, rng);
  p.dec1a = make_sarb(ps, name + ".dec1a", 2 * dim, head_width, rng, kind, window);
  p.dec1b = make_sarb(ps, name + ".dec1b", 2 * dim, head_width, rng, kind, window);
  p.up0 = make_conv_t(ps, name + ".up0", 2 * dim, dim, 2, 2, rng);
  p.fuse0 = make_dsconv1x1(ps, name + ".fuse0", 2 * dim, dim, rng);
  p.dec0a = make_sarb(ps, name + ".dec0a", dim, head_width, rng, kind, window);
  p.dec0b = make_sarb(ps, name + ".dec0b", dim, head_width, rng, kind, window);
  p.mapping = make_conv(ps, name + ".mapping", dim, dim, 3, 3, s3, rng, true);
  return p;
}

template <typename S>
Tensor<S> stformer_forward(const Tensor<S>& f, StformerParams<S>& p, bool training,
                           GradTape<S>* tape) {
  if (f.rank() != 3 || f.dim(1) % 4 != 0 || f.dim(2) % 4 != 0)
    throw std::invalid_argument("stformer_forward: extents must be divisible by 4, got " +
                                shape_str(f.shape()));
  Tensor<S> e = p.embed(f, tape);
  Tensor<S> s0 = sarb_forward(sarb_forward(e, p.enc0a, tape), p.enc0b, tape);
  Tensor<S> s1 = sarb_forward(sarb_forward(p.down0(s0, tape), p.enc1a, tape), p.enc1b, tape);
  Tensor<S> s2 = sarb_forward(sarb_forward(p.down1(s1, tape), p.enc2a, tape), p.enc2b, tape);
  Tensor<S> b = mswb_forward(s2, p.bottleneck, training, tape);
  Tensor<S> u1 = p.fuse1(concat_channels<S>({p.up1(b, tape), s1}, tape), tape);
  u1 = sarb_forward(sarb_forward(u1, p.dec1a, tape), p.dec1b, tape);
  Tensor<S> u0 = p.fuse0(concat_channels<S>({p.up0(u1, tape), s0}, tape), tape);
  u0 = sarb_forward(sarb_forward(u0, p.dec0a, tape), p.dec0b, tape);
  return p.mapping(u0, tape);
}

template <typename S>
MtsicParams<S> make_mtsic(ParamSet<S>& ps, int bands, int base, int dim, int stages_n,
                          int head_width, Rng& rng, AttentionKind kind, int window) {
  if (stages_n < 1) throw std::invalid_argument("make_mtsic: need at least one stage");
  if (head_width <= 0 || dim % head_width != 0 || (2 * dim) % head_width != 0)
    throw std::invalid_argument("make_mtsic: head width must divide dim and its multiples");
  MtsicParams<S> p;
  p.bands = bands;
  p.base = base;
  p.dim = dim;
  p.stages_n = stages_n;
  p.head_width = head_width;
  p.backbone = make_backbone(ps, "backbone", bands, base, dim, rng);
  for (int k = 0; k < stages_n; ++k) {
    p.stages.push_back(
        make_stformer(ps, "stage" + std::to_string(k), dim, head_width, rng, kind, window));
    p.stage_skip.push_back(
        ps.add("stage" + std::to_string(k) + ".skip", Tensor<S>::full({1}, S(1))));
  }
  p.global_proj = make_conv(ps, "global_proj", dim, dim, 1, 1, ConvSpec{}, rng, true);
  ConvSpec s3;
  s3.pad = 1;
  p.head = make_conv(ps, "head", dim, 3, 3, 3, s3, rng, true);
  return p;
}

template <typename S>
Tensor<S> mtsic_forward(const Tensor<S>& cube, MtsicParams<S>& p, bool training,
                        GradTape<S>* tape) {
  Tensor<S> f0 = backbone_forward(cube, p.backbone, training, tape);
  Tensor<S> f = f0;
  for (int k = 0; k < p.stages_n; ++k) {
    Tensor<S> refined = stformer_forward(f, p.stages[(size_t)k], training, tape);
    f = add(refined, mul(f, p.stage_skip[(size_t)k].reshape({1, 1, 1}), tape), tape);
  }
  Tensor<S> out = add(f, p.global_proj(f0, tape), tape);
  return tanh_op(p.head(out, tape), tape);
}

template BackboneParams<float> make_backbone<float>(ParamSet<float>&, const std::string&, int,
                                                    int, int, Rng&);
template BackboneParams<double> make_backbone<double>(ParamSet<double>&, const std::string&, int,
                                                      int, int, Rng&);
template Tensor<float> backbone_forward<float>(const Tensor<float>&, BackboneParams<float>&,
                                               bool, GradTape<float>*);
template Tensor<double> backbone_forward<double>(const Tensor<double>&, BackboneParams<double>&,
                                                 bool, GradTape<double>*);
template StformerParams<float> make_stformer<float>(ParamSet<float>&, const std::string&, int,
                                                    int, Rng&, AttentionKind, int);
template StformerParams<double> make_stformer<double>(ParamSet<double>&, const std::string&, int,
                                                      int, Rng&, AttentionKind, int);
template Tensor<float> stformer_forward<float>(const Tensor<float>&, StformerParams<float>&,
                                               bool, GradTape<float>*);
template Tensor<double> stformer_forward<double>(const Tensor<double>&, StformerParams<double>&,
                                                 bool, GradTape<double>*);
template MtsicParams<float> make_mtsic<float>(ParamSet<float>&, int, int, int, int, int, Rng&,
                                              AttentionKind, int);
template MtsicParams<double> make_mtsic<double>(ParamSet<double>&, int, int, int, int, int, Rng&,
                                                AttentionKind, int);
template Tensor<float> mtsic_forward<float>(const Tensor<float>&, MtsicParams<float>&, bool,
                                            GradTape<float>*);
template Tensor<double> mtsic_forward<double>(const Tensor<double>&, MtsicParams<double>&, bool,
                                              GradTape<double>*);

}  // namespace mtsic

#include "mtsic/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace mtsic {
namespace {

// rows [c0, c1) of a {rows, cols} matrix, differentiable
template <typename S>
Tensor<S> row_block(const Tensor<S>& m, int c0, int c1, GradTape<S>* tape) {
  const int rows = m.dim(0), cols = m.dim(1);
  Tensor<S> r3 = m.reshape({rows, cols, 1});
  return slice_channels(r3, c0, c1, tape).reshape({c1 - c0, cols});
}

// a single learnable scalar as a broadcastable {1,1} view
template <typename S>
Tensor<S> scalar_view(const Tensor<S>& v, int i, GradTape<S>* tape) {
  Tensor<S> r3 = v.reshape({v.dim(0), 1, 1});
  return slice_channels(r3, i, i + 1, tape).reshape({1, 1});
}

// spatial attention over one flattened token block: q,k,v are {dim, T};
// returns {dim, T} = (softmax_keys(Q K^T / sqrt(dim)) V)^T
template <typename S>
Tensor<S> spatial_core(const Tensor<S>& qT, const Tensor<S>& kT, const Tensor<S>& vT, int dim,
                       GradTape<S>* tape) {
  Tensor<S> logits = matmul(qT, kT, true, false, tape);  // {T,T}, rows=query
  logits = scale(logits, S(1.0 / std::sqrt((double)dim)), tape);
  Tensor<S> a = softmax(logits, 1, tape);                // distribution over keys
  return matmul(vT, a, false, true, tape);               // {dim,T}
}

// toroidal roll by (sy, sx) composed from crops and zero-pads
template <typename S>
Tensor<S> roll_spatial(const Tensor<S>& x, int sy, int sx, GradTape<S>* tape) {
  const int H = x.dim(1), W = x.dim(2);
  sy = ((sy % H) + H) % H;
  sx = ((sx % W) + W) % W;
  if (sy == 0 && sx == 0) return x;
  // out[r, c] = x[(r + sy) mod H, (c + sx) mod W]
  Tensor<S> out;
  for (int qy = 0; qy < 2; ++qy) {
    const int r0 = qy == 0 ? sy : 0, r1 = qy == 0 ? H : sy;
    const int dr = qy == 0 ? 0 : H - sy;
    if (r0 >= r1) continue;
    for (int qx = 0; qx < 2; ++qx) {
      const int c0 = qx == 0 ? sx : 0, c1 = qx == 0 ? W : sx;
      const int dc = qx == 0 ? 0 : W - sx;
      if (c0 >= c1) continue;
      Tensor<S> piece = crop_spatial(x, r0, r1, c0, c1, tape);
      piece = pad_spatial(piece, dr, H - dr - (r1 - r0), dc, W - dc - (c1 - c0), tape);
      out = out.defined() ? add(out, piece, tape) : piece;
    }
  }
  return out;
}

template <typename S>
Tensor<S> position_term(const Tensor<S>& v_sp, const SmsaParams<S>& p, GradTape<S>* tape) {
  return p.pos2(gelu(p.pos1(v_sp, tape), tape), tape);
}

}  // namespace

template <typename S>
SmsaParams<S> make_smsa(ParamSet<S>& ps, const std::string& name, int dim, int head_width,
                        Rng& rng) {
  if (head_width <= 0 || dim % head_width != 0)
    throw std::invalid_argument("make_smsa: dim " + std::to_string(dim) +
                                " not divisible by head width " + std::to_string(head_width));
  SmsaParams<S> p;
  p.dim = dim;
  p.head_width = head_width;
  for (auto [t, field] : {std::pair<Tensor<S>*, const char*>{&p.wq, ".wq"},
                          {&p.wk, ".wk"},
                          {&p.wv, ".wv"},
                          {&p.w_out, ".wo"}}) {
    Tensor<S> w({dim, dim});
    init_fan_in(w, rng, dim);
    *t = ps.add(name + field, w);
  }
  p.sigma = ps.add(name + ".sigma", Tensor<S>::full({p.heads()}, S(1)));
  p.sigma_global = ps.add(name + ".sigma_g", Tensor<S>::full({1}, S(1)));
  ConvSpec dw;
  dw.pad = 1;
  dw.groups = dim;
  p.pos1 = make_conv(ps, name + ".pos1", dim, dim, 3, 3, dw, rng, true);
  p.pos2 = make_conv(ps, name + ".pos2", dim, dim, 3, 3, dw, rng, true);
  return p;
}

template <typename S>
Tensor<S> smsa_forward(const Tensor<S>& y, const SmsaParams<S>& p, GradTape<S>* tape,
                       bool pos_enc) {
  if (y.rank() != 3 || y.dim(0) != p.dim)
    throw std::invalid_argument("smsa_forward: expected {dim,H,W} with dim " +
                                std::to_string(p.dim) + ", got " + shape_str(y.shape()));
  const int dim = p.dim, H = y.dim(1), W = y.dim(2);
  const int hw = H * W;
  const int cw = p.head_width, n = p.heads();

  // the flattened map is Y^T for Y of shape HW x dim, so Q = Y Wq becomes
  // Q^T = Wq^T Y^T and every product below works on the transposed layout
  Tensor<S> yT = y.reshape({dim, hw});
  Tensor<S> qT = matmul(p.wq, yT, true, false, tape);
  Tensor<S> kT = matmul(p.wk, yT, true, false, tape);
  Tensor<S> vT = matmul(p.wv, yT, true, false, tape);

  std::vector<Tensor<S>> heads3;
  heads3.reserve((size_t)n);
  for (int j = 0; j < n; ++j) {
    Tensor<S> qj = row_block(qT, j * cw, (j + 1) * cw, tape);
    Tensor<S> kj = row_block(kT, j * cw, (j + 1) * cw, tape);
    Tensor<S> vj = row_block(vT, j * cw, (j + 1) * cw, tape);
    Tensor<S> logits = matmul(kj, qj, false, true, tape);  // {cw,cw} = K^T Q
    logits = mul(logits, scalar_view(p.sigma, j, tape), tape);
    Tensor<S> a = softmax(logits, 0, tape);                // columns sum to 1
    Tensor<S> headT = matmul(a, vj, true, false, tape);    // {cw,hw} = (V A)^T
    heads3.push_back(headT.reshape({cw, hw, 1}));
  }
  Tensor<S> catT = concat_channels(heads3, tape).reshape({dim, hw});
  Tensor<S> out = matmul(p.w_out, catT, true, false, tape);  // (concat . W)^T

  // full-width value branch: V softmax(sigma_g V^T V)
  Tensor<S> gram = matmul(vT, vT, false, true, tape);  // {dim,dim} = V^T V
  gram = mul(gram, p.sigma_global.reshape({1, 1}), tape);
  Tensor<S> g = softmax(gram, 0, tape);
  out = add(out, matmul(g, vT, true, false, tape), tape);

  if (pos_enc) {
    Tensor<S> pos = position_term(vT.reshape({dim, H, W}), p, tape);
    out = add(out, pos.reshape({dim, hw}), tape);
  }
  return out.reshape({dim, H, W});
}

template <typename S>
Tensor<S> attention_alternative(const Tensor<S>& y, const SmsaParams<S>& p, AttentionKind kind,
                                int window, GradTape<S>* tape, bool pos_enc) {
  if (kind == AttentionKind::smsa) return smsa_forward(y, p, tape, pos_enc);
  if (y.rank() != 3 || y.dim(0) != p.dim)
    throw std::invalid_argument("attention_alternative: expected {dim,H,W}, got " +
                                shape_str(y.shape()));
  const int dim = p.dim, H = y.dim(1), W = y.dim(2);
  const int hw = H * W;
  Tensor<S> yT = y.reshape({dim, hw});
  Tensor<S> qT = matmul(p.wq, yT, true, false, tape);
  Tensor<S> kT = matmul(p.wk, yT, true, false, tape);
  Tensor<S> vT = matmul(p.wv, yT, true, false, tape);

  Tensor<S> mixedT;
  if (kind == AttentionKind::gmsa) {
    mixedT = spatial_core(qT, kT, vT, dim, tape);
  } else {
    const int m = window;
    if (m <= 0 || H % m != 0 || W % m != 0)
      throw std::invalid_argument("attention_alternative: window " + std::to_string(m) +
                                  " does not divide " + shape_str(y.shape()));
    const int shift = kind == AttentionKind::swmsa ? m / 2 : 0;
    Tensor<S> qs = qT.reshape({dim, H, W});
    Tensor<S> ks = kT.reshape({dim, H, W});
    Tensor<S> vs = vT.reshape({dim, H, W});
    if (shift) {
      qs = roll_spatial(qs, shift, shift, tape);
      ks = roll_spatial(ks, shift, shift, tape);
      vs = roll_spatial(vs, shift, shift, tape);
    }
    Tensor<S> acc;
    for (int wy = 0; wy < H; wy += m) {
      for (int wx = 0; wx < W; wx += m) {
        Tensor<S> qw = crop_spatial(qs, wy, wy + m, wx, wx + m, tape).reshape({dim, m * m});
        Tensor<S> kw = crop_spatial(ks, wy, wy + m, wx, wx + m, tape).reshape({dim, m * m});
        Tensor<S> vw = crop_spatial(vs, wy, wy + m, wx, wx + m, tape).reshape({dim, m * m});
        Tensor<S> ow = spatial_core(qw, kw, vw, dim, tape).reshape({dim, m, m});
        ow = pad_spatial(ow, wy, H - wy - m, wx, W - wx - m, tape);
        acc = acc.defined() ? add(acc, ow, tape) : ow;
      }
    }
    if (shift) acc = roll_spatial(acc, -shift, -shift, tape);
    mixedT = acc.reshape({dim, hw});
  }

  Tensor<S> out = matmul(p.w_out, mixedT, true, false, tape);
  if (pos_enc) {
    Tensor<S> pos = position_term(vT.reshape({dim, H, W}), p, tape);
    out = add(out, pos.reshape({dim, hw}), tape);
  }
  return out.reshape({dim, H, W});
}

template <typename S>
std::vector<Tensor<S>> smsa_attention_matrices(const Tensor<S>& y, const SmsaParams<S>& p) {
  const int dim = p.dim, hw = y.dim(1) * y.dim(2);
  const int cw = p.head_width, n = p.heads();
  Tensor<S> yT = y.reshape({dim, hw});
  Tensor<S> qT = matmul(p.wq, yT, true, false);
  Tensor<S> kT = matmul(p.wk, yT, true, false);
  Tensor<S> vT = matmul(p.wv, yT, true, false);
  std::vector<Tensor<S>> mats;
  for (int j = 0; j < n; ++j) {
    Tensor<S> qj = row_block<S>(qT, j * cw, (j + 1) * cw, nullptr);
    Tensor<S> kj = row_block<S>(kT, j * cw, (j + 1) * cw, nullptr);
    Tensor<S> logits = matmul(kj, qj, false, true);
    logits = mul(logits, scalar_view<S>(p.sigma, j, nullptr));
    mats.push_back(softmax(logits, 0));
  }
  Tensor<S> gram = mul(matmul(vT, vT, false, true), p.sigma_global.reshape({1, 1}));
  mats.push_back(softmax(gram, 0));
  return mats;
}

int64_t smsa_flops(int h, int w, int dim, int head_width) {
  const int64_t hw = (int64_t)h * w;
  const int64_t d = dim;
  // 4 projections + per-head K^T Q and V A + the full-width V branch + two
  // depthwise 3x3 position convs
  return hw * (4 * d * d) + hw * (2 * (int64_t)head_width * d) + hw * (2 * d * d) +
         hw * (18 * d);
}

int64_t gmsa_flops(int h, int w, int dim) {
  const int64_t hw = (int64_t)h * w;
  const int64_t d = dim;
  return hw * (4 * d * d) + 2 * hw * hw * d + hw * (18 * d);
}

int64_t wmsa_flops(int h, int w, int dim, int window) {
  const int64_t hw = (int64_t)h * w;
  const int64_t d = dim;
  const int64_t m2 = (int64_t)window * window;
  return hw * (4 * d * d) + 2 * hw * m2 * d + hw * (18 * d);
}

template <typename S>
SarbParams<S> make_sarb(ParamSet<S>& ps, const std::string& name, int ch, int head_width,
                        Rng& rng, AttentionKind kind, int window) {
  SarbParams<S> p;
  p.kind = kind;
  p.window = window;
  ConvSpec s3;
  s3.pad = 1;
  p.res1 = make_conv(ps, name + ".res1", ch, ch, 3, 3, s3, rng, true);
  p.res2 = make_conv(ps, name + ".res2", ch, ch, 3, 3, s3, rng, true);
  p.ln1 = make_layer_norm(ps, name + ".ln1", ch);
  p.ln2 = make_layer_norm(ps, name + ".ln2", ch);
  p.smsa = make_smsa(ps, name + ".smsa", ch, head_width, rng);
  p.ffn_expand = make_conv(ps, name + ".ffn.expand", ch, 4 * ch, 1, 1, ConvSpec{}, rng, true);
  ConvSpec dw;
  dw.pad = 1;
  dw.groups = 4 * ch;
  p.ffn_dw = make_conv(ps, name + ".ffn.dw", 4 * ch, 4 * ch, 3, 3, dw, rng, true);
  p.ffn_proj = make_conv(ps, name + ".ffn.proj", 4 * ch, ch, 1, 1, ConvSpec{}, rng, true);
  return p;
}

template <typename S>
Tensor<S> sarb_forward(const Tensor<S>& y, const SarbParams<S>& p, GradTape<S>* tape) {
  Tensor<S> u = add(y, p.res2(relu(p.res1(y, tape), tape), tape), tape);
  Tensor<S> attn = attention_alternative(p.ln1(u, tape), p.smsa, p.kind, p.window, tape);
  Tensor<S> v = add(u, attn, tape);
  Tensor<S> f = p.ln2(v, tape);
  f = p.ffn_proj(p.ffn_dw(gelu(p.ffn_expand(f, tape), tape), tape), tape);
  return add(v, f, tape);
}

template SmsaParams<float> make_smsa<float>(ParamSet<float>&, const std::string&, int, int, Rng&);
template SmsaParams<double> make_smsa<double>(ParamSet<double>&, const std::string&, int, int,
                                              Rng&);
template Tensor<float> smsa_forward<float>(const Tensor<float>&, const SmsaParams<float>&,
                                           GradTape<float>*, bool);
template Tensor<double> smsa_forward<double>(const Tensor<double>&, const SmsaParams<double>&,
                                             GradTape<double>*, bool);
template Tensor<float> attention_alternative<float>(const Tensor<float>&,
                                                    const SmsaParams<float>&, AttentionKind, int,
                                                    GradTape<float>*, bool);
template Tensor<double> attention_alternative<double>(const Tensor<double>&,
                                                      const SmsaParams<double>&, AttentionKind,
                                                      int, GradTape<double>*, bool);
template std::vector<Tensor<float>> smsa_attention_matrices<float>(const Tensor<float>&,
                                                                   const SmsaParams<float>&);
template std::vector<Tensor<double>> smsa_attention_matrices<double>(const Tensor<double>&,
                                                                     const SmsaParams<double>&);
template SarbParams<float> make_sarb<float>(ParamSet<float>&, const std::string&, int, int, Rng&,
                                            AttentionKind, int);
template SarbParams<double> make_sarb<double>(ParamSet<double>&, const std::string&, int, int,
                                              Rng&, AttentionKind, int);
template Tensor<float> sarb_forward<float>(const Tensor<float>&, const SarbParams<float>&,
                                           GradTape<float>*);
template Tensor<double> sarb_forward<double>(const Tensor<double>&, const SarbParams<double>&,
                                             GradTape<double>*);

}  // namespace mtsic

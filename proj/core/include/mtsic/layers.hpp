#pragma once

#include <string>
#include <vector>

#include "mtsic/init.hpp"
#include "mtsic/ops.hpp"
#include "mtsic/rng.hpp"

// Small parameterized layers shared by the model modules, plus the named
// parameter registry that the optimizer, checkpoint IO, and gradient tools
// walk. Construction order is deterministic, so a registry built twice from
// the same seed is bit-identical.

namespace mtsic {

// Named registry of the tensors a model owns. Trainable items receive
// gradients and optimizer updates; buffers (batch-norm running statistics)
// ride along through checkpoints untouched by the optimizer.
template <typename S>
struct ParamSet {
  struct Item {
    std::string name;
    Tensor<S> t;
    bool trainable;
  };
  std::vector<Item> items;

  Tensor<S> add(const std::string& name, Tensor<S> t) {
    t.set_requires_grad(true);
    items.push_back({name, t, true});
    return t;
  }
  Tensor<S> add_buffer(const std::string& name, Tensor<S> t) {
    items.push_back({name, t, false});
    return t;
  }
  Tensor<S>* find(const std::string& name) {
    for (auto& it : items)
      if (it.name == name) return &it.t;
    return nullptr;
  }
  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& it : items)
      if (it.trainable) n += it.t.size();
    return n;
  }
  void zero_grad() {
    for (auto& it : items)
      if (it.trainable) it.t.zero_grad();
  }
  std::vector<Tensor<S>> trainable() const {
    std::vector<Tensor<S>> out;
    for (const auto& it : items)
      if (it.trainable) out.push_back(it.t);
    return out;
  }
  // zeroes every trainable tensor; buffers keep their values
  void set_all_zero() {
    for (auto& it : items) {
      if (!it.trainable) continue;
      S* d = it.t.data();
      for (int64_t i = 0; i < it.t.size(); ++i) d[i] = S(0);
    }
  }
};

// ---- convolution layers ----

template <typename S>
struct ConvLayer {
  Tensor<S> w, b;  // b may be undefined
  ConvSpec spec;
  Tensor<S> operator()(const Tensor<S>& x, GradTape<S>* tape = nullptr) const {
    return conv2d(x, w, b, spec, tape);
  }
};

template <typename S>
ConvLayer<S> make_conv(ParamSet<S>& ps, const std::string& name, int cin, int cout, int kh,
                       int kw, const ConvSpec& spec, Rng& rng, bool bias = true) {
  ConvLayer<S> l;
  l.spec = spec;
  Tensor<S> w({cout, cin / spec.groups, kh, kw});
  init_fan_in(w, rng, (int64_t)(cin / spec.groups) * kh * kw);
  l.w = ps.add(name + ".w", w);
  if (bias) l.b = ps.add(name + ".b", Tensor<S>({cout}));
  return l;
}

template <typename S>
struct ConvTLayer {
  Tensor<S> w, b;
  int stride = 2;
  Tensor<S> operator()(const Tensor<S>& x, GradTape<S>* tape = nullptr) const {
    return conv_transpose2d(x, w, b, stride, tape);
  }
};

template <typename S>
ConvTLayer<S> make_conv_t(ParamSet<S>& ps, const std::string& name, int cin, int cout, int k,
                          int stride, Rng& rng) {
  ConvTLayer<S> l;
  l.stride = stride;
  Tensor<S> w({cin, cout, k, k});
  init_fan_in(w, rng, (int64_t)cin * k * k);
  l.w = ps.add(name + ".w", w);
  l.b = ps.add(name + ".b", Tensor<S>({cout}));
  return l;
}

// depthwise 1x1 followed by pointwise 1x1 projection
template <typename S>
struct DsConv1x1 {
  ConvLayer<S> dw, pw;
  Tensor<S> operator()(const Tensor<S>& x, GradTape<S>* tape = nullptr) const {
    return pw(dw(x, tape), tape);
  }
};

template <typename S>
DsConv1x1<S> make_dsconv1x1(ParamSet<S>& ps, const std::string& name, int cin, int cout,
                            Rng& rng) {
  DsConv1x1<S> l;
  ConvSpec dws;
  dws.groups = cin;
  l.dw = make_conv(ps, name + ".dw", cin, cin, 1, 1, dws, rng, false);
  l.pw = make_conv(ps, name + ".pw", cin, cout, 1, 1, ConvSpec{}, rng, true);
  return l;
}

// ---- normalization layers ----

template <typename S>
struct LnAffine {
  Tensor<S> gamma, beta;
  S eps = S(1e-5);
  Tensor<S> operator()(const Tensor<S>& x, GradTape<S>* tape = nullptr) const {
    return layer_norm(x, gamma, beta, eps, tape);
  }
};

template <typename S>
LnAffine<S> make_layer_norm(ParamSet<S>& ps, const std::string& name, int c) {
  LnAffine<S> l;
  l.gamma = ps.add(name + ".gamma", Tensor<S>::full({c}, S(1)));
  l.beta = ps.add(name + ".beta", Tensor<S>({c}));
  return l;
}

template <typename S>
struct BnLayer {
  Tensor<S> gamma, beta, running_mean, running_var;
  S momentum = S(0.1);
  S eps = S(1e-5);
  Tensor<S> operator()(const Tensor<S>& x, bool training, GradTape<S>* tape = nullptr) {
    return batch_norm(x, gamma, beta, running_mean, running_var, momentum, eps, training, tape);
  }
};

template <typename S>
BnLayer<S> make_batch_norm(ParamSet<S>& ps, const std::string& name, int c) {
  BnLayer<S> l;
  l.gamma = ps.add(name + ".gamma", Tensor<S>::full({c}, S(1)));
  l.beta = ps.add(name + ".beta", Tensor<S>({c}));
  l.running_mean = ps.add_buffer(name + ".running_mean", Tensor<S>({c}));
  l.running_var = ps.add_buffer(name + ".running_var", Tensor<S>::full({c}, S(1)));
  return l;
}

// ---- composite blocks ----

// convolution + batch norm + ReLU
template <typename S>
struct CbrBlock {
  ConvLayer<S> conv;
  BnLayer<S> bn;
  Tensor<S> operator()(const Tensor<S>& x, bool training, GradTape<S>* tape = nullptr) {
    return relu(bn(conv(x, tape), training, tape), tape);
  }
};

template <typename S>
CbrBlock<S> make_cbr(ParamSet<S>& ps, const std::string& name, int cin, int cout, int k,
                     int stride, Rng& rng) {
  CbrBlock<S> b;
  ConvSpec spec;
  spec.stride = stride;
  spec.pad = k / 2;
  b.conv = make_conv(ps, name + ".conv", cin, cout, k, k, spec, rng, false);
  b.bn = make_batch_norm(ps, name + ".bn", cout);
  return b;
}

// two affine layers around one activation, applied to a rank-1 tensor
template <typename S>
struct Mlp {
  Tensor<S> w1, b1, w2, b2;
  S slope = S(0);  // 0 = ReLU hidden activation, else leaky
  Tensor<S> operator()(const Tensor<S>& x, GradTape<S>* tape = nullptr) const {
    Tensor<S> h = linear(x, w1, b1, tape);
    h = slope == S(0) ? relu(h, tape) : leaky_relu(h, slope, tape);
    return linear(h, w2, b2, tape);
  }
};

template <typename S>
Mlp<S> make_mlp(ParamSet<S>& ps, const std::string& name, int cin, int hidden, int cout, Rng& rng,
                S slope = S(0)) {
  Mlp<S> m;
  m.slope = slope;
  Tensor<S> w1({hidden, cin});
  init_fan_in(w1, rng, cin);
  m.w1 = ps.add(name + ".w1", w1);
  m.b1 = ps.add(name + ".b1", Tensor<S>({hidden}));
  Tensor<S> w2({cout, hidden});
  init_fan_in(w2, rng, hidden);
  m.w2 = ps.add(name + ".w2", w2);
  m.b2 = ps.add(name + ".b2", Tensor<S>({cout}));
  return m;
}

}  // namespace mtsic

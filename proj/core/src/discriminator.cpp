#include "mtsic/discriminator.hpp"

#include <stdexcept>

namespace mtsic {
namespace {

constexpr float kSlope = 0.2f;

}

template <typename S>
DiscParams<S> make_discriminator(ParamSet<S>& ps, int bands, int base, int scales, Rng& rng) {
  if (scales < 1) throw std::invalid_argument("make_discriminator: need at least one scale");
  DiscParams<S> p;
  p.bands = bands;
  p.base = base;
  ConvSpec s42;
  s42.stride = 2;
  s42.pad = 1;
  p.initial = make_conv(ps, "disc.initial", 3 + bands, base, 4, 4, s42, rng, true);
  ConvSpec s3;
  s3.pad = 1;
  int ch = base;
  for (int m = 0; m < scales; ++m) {
    const std::string name = "disc.scale" + std::to_string(m);
    DiscScale<S> sc;
    sc.down = make_conv(ps, name + ".down", ch, 2 * ch, 4, 4, s42, rng, true);
    ch *= 2;
    sc.adapt1 = make_conv(ps, name + ".adapt1", ch, ch, 3, 3, s3, rng, true);
    sc.adapt2 = make_conv(ps, name + ".adapt2", ch, ch, 3, 3, s3, rng, true);
    const char* stat[3] = {".mean", ".max", ".std"};
    for (int n = 0; n < 3; ++n)
      sc.heads[n] = make_mlp(ps, name + stat[n], ch, ch, 1, rng, S(kSlope));
    p.scales.push_back(sc);
  }
  return p;
}

template <typename S>
DiscOutput<S> disc_forward(const Tensor<S>& x, const Tensor<S>& cube, const DiscParams<S>& p,
                           GradTape<S>* tape) {
  if (x.rank() != 3 || cube.rank() != 3 || x.dim(0) != 3)
    throw std::invalid_argument("disc_forward: expected {3,H,W} and {L,H,W}, got " +
                                shape_str(x.shape()) + " and " + shape_str(cube.shape()));
  if (x.dim(1) != cube.dim(1) || x.dim(2) != cube.dim(2))
    throw std::invalid_argument("disc_forward: spatial extents disagree, " +
                                shape_str(x.shape()) + " vs " + shape_str(cube.shape()));
  DiscOutput<S> out;
  out.scale_count = (int)p.scales.size();
  Tensor<S> f = concat_channels<S>({x, cube}, tape);
  f = leaky_relu(p.initial(f, tape), S(kSlope), tape);
  for (const DiscScale<S>& sc : p.scales) {
    f = leaky_relu(sc.down(f, tape), S(kSlope), tape);
    f = leaky_relu(sc.adapt1(f, tape), S(kSlope), tape);
    f = leaky_relu(sc.adapt2(f, tape), S(kSlope), tape);
    out.features.push_back(f);
    Tensor<S> stats[3] = {spatial_mean(f, tape), spatial_max(f, tape), spatial_std(f, tape)};
    for (int n = 0; n < 3; ++n) out.scores.push_back(sc.heads[n](stats[n], tape));
  }
  return out;
}

template <typename S>
DiscParams<S> disc_detached(const DiscParams<S>& p) {
  DiscParams<S> d = p;
  auto cut = [](ConvLayer<S>& c) {
    c.w = c.w.detach();
    if (c.b.defined()) c.b = c.b.detach();
  };
  auto cut_mlp = [](Mlp<S>& m) {
    m.w1 = m.w1.detach();
    m.b1 = m.b1.detach();
    m.w2 = m.w2.detach();
    m.b2 = m.b2.detach();
  };
  cut(d.initial);
  for (DiscScale<S>& sc : d.scales) {
    cut(sc.down);
    cut(sc.adapt1);
    cut(sc.adapt2);
    for (int n = 0; n < 3; ++n) cut_mlp(sc.heads[n]);
  }
  return d;
}

template DiscParams<float> make_discriminator<float>(ParamSet<float>&, int, int, int, Rng&);
template DiscParams<double> make_discriminator<double>(ParamSet<double>&, int, int, int, Rng&);
template DiscOutput<float> disc_forward<float>(const Tensor<float>&, const Tensor<float>&,
                                               const DiscParams<float>&, GradTape<float>*);
template DiscOutput<double> disc_forward<double>(const Tensor<double>&, const Tensor<double>&,
                                                 const DiscParams<double>&, GradTape<double>*);
template DiscParams<float> disc_detached<float>(const DiscParams<float>&);
template DiscParams<double> disc_detached<double>(const DiscParams<double>&);

}  // namespace mtsic

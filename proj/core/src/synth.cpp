#include "mtsic/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "mtsic/rng.hpp"

namespace mtsic {
namespace {

constexpr double kTau = 6.283185307179586;

// hue in [0,1), saturation/value in [0,1]
void hsv_to_rgb(double hue, double sat, double val, float out[3]) {
  double h6 = hue * 6.0;
  int sector = int(h6) % 6;
  double f = h6 - std::floor(h6);
  double p = val * (1.0 - sat);
  double q = val * (1.0 - sat * f);
  double t = val * (1.0 - sat * (1.0 - f));
  double r, g, b;
  switch (sector) {
    case 0: r = val, g = t, b = p; break;
    case 1: r = q, g = val, b = p; break;
    case 2: r = p, g = val, b = t; break;
    case 3: r = p, g = q, b = val; break;
    case 4: r = t, g = p, b = val; break;
    default: r = val, g = p, b = q; break;
  }
  out[0] = float(r);
  out[1] = float(g);
  out[2] = float(b);
}

struct Shape {
  bool ellipse;
  double ci, cj, ri, rj;  // center and half extents in pixels
  int material;
  bool contains(int i, int j) const {
    double di = (i - ci) / ri, dj = (j - cj) / rj;
    if (ellipse) return di * di + dj * dj <= 1.0;
    return std::fabs(di) <= 1.0 && std::fabs(dj) <= 1.0;
  }
};

}  // namespace

std::vector<MaterialSignature> make_palette(int bands, int count) {
  if (bands < 1 || count < 2)
    throw std::invalid_argument("make_palette: need at least one band and two materials");
  std::vector<MaterialSignature> palette((size_t)count);
  const double width = std::max(0.6, bands / 5.0);
  for (int m = 0; m < count; ++m) {
    MaterialSignature& mat = palette[(size_t)m];
    const double center = (m + 0.5) * bands / double(count);
    const double amp = 0.7 + 0.3 * ((m * 5) % count) / double(count);
    mat.spectrum.resize((size_t)bands);
    for (int l = 0; l < bands; ++l) {
      double d = (l + 0.5) - center;
      mat.spectrum[(size_t)l] = float(amp * std::exp(-d * d / (2.0 * width * width)));
    }
    // hue keyed to the bump position; the 0.9 span keeps the map injective
    // (no wrap-around collision between the first and last material)
    hsv_to_rgb(0.9 * center / bands, 0.75, 0.95, mat.color);
  }
  return palette;
}

ScenePair synth_scene(const SceneSpec& spec) {
  if (spec.bands < 1 || spec.h < 1 || spec.w < 1)
    throw std::invalid_argument("synth_scene: bad extents");
  if (spec.shapes != 0 && (spec.shapes < 3 || spec.shapes > 8))
    throw std::invalid_argument("synth_scene: shape count must lie in [3,8]");
  Rng rng(spec.seed);
  const int L = spec.bands, H = spec.h, W = spec.w;
  const auto palette = make_palette(L);
  const int k = spec.shapes != 0 ? spec.shapes : 3 + rng.uniform_int(6);

  // low-frequency intensity field in (0,1]
  const double f1i = 1.0 + rng.uniform_int(2), f1j = 1.0 + rng.uniform_int(2);
  const double f2i = 1.0 + rng.uniform_int(3), f2j = 1.0 + rng.uniform_int(3);
  const double p1 = rng.uniform(0.0, kTau), p2 = rng.uniform(0.0, kTau);
  auto field = [&](int i, int j) {
    double a = std::sin(kTau * (f1i * i / H + f1j * j / W) + p1);
    double b = std::cos(kTau * (f2i * i / H + f2j * j / W) + p2);
    return 0.55 + 0.25 * a + 0.2 * b;
  };

  std::vector<Shape> shapes((size_t)k);
  for (Shape& s : shapes) {
    s.ellipse = rng.uniform_int(2) == 1;
    s.ci = rng.uniform(0.15, 0.85) * H;
    s.cj = rng.uniform(0.15, 0.85) * W;
    s.ri = rng.uniform(0.08, 0.3) * H;
    s.rj = rng.uniform(0.08, 0.3) * W;
    s.material = 1 + rng.uniform_int(int(palette.size()) - 1);
  }

  ScenePair out;
  out.cube = Tensor<float>({L, H, W});
  out.rgb = Tensor<float>({3, H, W});
  const int64_t hw = int64_t(H) * W;
  std::vector<int> material_at((size_t)hw, 0);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j)
      for (const Shape& s : shapes)  // later shapes paint over earlier ones
        if (s.contains(i, j)) material_at[(size_t)i * W + j] = s.material;

  float* cube = out.cube.data();
  float* rgb = out.rgb.data();
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const int64_t px = int64_t(i) * W + j;
      const MaterialSignature& mat = palette[(size_t)material_at[(size_t)px]];
      const float f = float(field(i, j));
      for (int l = 0; l < L; ++l) cube[l * hw + px] = mat.spectrum[(size_t)l] * f;
      for (int c = 0; c < 3; ++c) rgb[c * hw + px] = mat.color[c] * f;
    }
  }
  if (spec.noise > 0)
    for (int64_t i = 0; i < out.cube.size(); ++i)
      cube[i] += spec.noise * float(rng.gaussian());
  return out;
}

}  // namespace mtsic

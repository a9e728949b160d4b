#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "mtsic/checkpoint.hpp"
#include "mtsic/config.hpp"
#include "mtsic/evaluate.hpp"
#include "mtsic/io.hpp"
#include "mtsic/synth.hpp"
#include "mtsic/train.hpp"
#include "test_util.hpp"

using namespace mtsic;
using namespace mtsic_test;

namespace {

namespace fs = std::filesystem;

std::string temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("mtsic_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename S>
bool same_bits(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(S) * static_cast<size_t>(a.size())) == 0;
}

// writes `count` synthetic scenes into dir as cube/png pairs
void make_data_dir(const std::string& dir, int count, int bands, int size, uint64_t seed0) {
  for (int k = 0; k < count; ++k) {
    SceneSpec spec;
    spec.seed = seed0 + static_cast<uint64_t>(k);
    spec.bands = bands;
    spec.h = spec.w = size;
    spec.noise = 0.01f;
    ScenePair scene = synth_scene(spec);
    char name[32];
    std::snprintf(name, sizeof(name), "/scene_%04d", k);
    write_cube(dir + name + ".cube", scene.cube);
    write_png_rgb(dir + name + ".png", scene.rgb);
  }
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.decay_start = 1;
  cfg.lr = 1e-3;
  cfg.batch = 1;
  cfg.crop = 32;
  cfg.stride = 24;
  cfg.stages_n = 1;
  cfg.base = 2;
  cfg.dim = 4;
  cfg.head_width = 2;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST(CubeIo, RoundTripIsBitExact) {
  Rng rng(41);
  Tensor<float> cube = Tensor<float>::zeros({3, 5, 7});
  fill_uniform(cube, rng, -2.0f, 2.0f);
  const std::string dir = temp_dir("cube_rt");
  write_cube(dir + "/a.cube", cube);
  Tensor<float> back = read_cube(dir + "/a.cube");
  ASSERT_EQ(back.shape(), cube.shape());
  EXPECT_TRUE(same_bits(cube, back));
}

TEST(CubeIo, RejectsBadMagicVersionAndSizes) {
  const std::string dir = temp_dir("cube_bad");
  Tensor<float> cube = Tensor<float>::full({2, 3, 3}, 0.5f);
  const std::string path = dir + "/a.cube";
  write_cube(path, cube);

  std::string bytes = slurp(path);
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::ofstream(dir + "/magic.cube", std::ios::binary) << wrong_magic;
  EXPECT_THROW(read_cube(dir + "/magic.cube"), std::runtime_error);

  std::string wrong_version = bytes;
  wrong_version[4] = 2;
  std::ofstream(dir + "/version.cube", std::ios::binary) << wrong_version;
  EXPECT_THROW(read_cube(dir + "/version.cube"), std::runtime_error);

  std::ofstream(dir + "/short.cube", std::ios::binary)
      << bytes.substr(0, bytes.size() - 5);
  EXPECT_THROW(read_cube(dir + "/short.cube"), std::runtime_error);

  std::ofstream(dir + "/long.cube", std::ios::binary) << (bytes + "z");
  EXPECT_THROW(read_cube(dir + "/long.cube"), std::runtime_error);

  EXPECT_THROW(read_cube(dir + "/absent.cube"), std::runtime_error);
}

TEST(PngIo, RoundTripQuantizesAndClamps) {
  Tensor<float> rgb = Tensor<float>::zeros({3, 2, 3});
  const float vals[] = {0.0f, 1.0f, 0.5f, 0.25f, 0.8f, 0.123f, -0.2f, 1.5f, 0.999f,
                        0.001f, 0.37f, 0.62f, 0.11f, 0.93f, 0.48f, 0.05f, 0.77f, 0.3f};
  for (int i = 0; i < 18; ++i) rgb.data()[i] = vals[i];
  const std::string dir = temp_dir("png_rt");
  write_png_rgb(dir + "/a.png", rgb);
  Tensor<float> back = read_png_rgb(dir + "/a.png");
  ASSERT_EQ(back.shape(), rgb.shape());
  for (int i = 0; i < 18; ++i) {
    float clamped = std::min(std::max(vals[i], 0.0f), 1.0f);
    float expected = static_cast<float>(std::lround(clamped * 255.0f)) / 255.0f;
    EXPECT_EQ(back.data()[i], expected) << "pixel " << i;
  }
}

TEST(ScenePairs, ListsSortedAndValidates) {
  const std::string dir = temp_dir("pairs");
  Tensor<float> cube = Tensor<float>::full({2, 4, 4}, 0.5f);
  Tensor<float> rgb = Tensor<float>::full({3, 4, 4}, 0.5f);
  write_cube(dir + "/b.cube", cube);
  write_png_rgb(dir + "/b.png", rgb);
  write_cube(dir + "/a.cube", cube);
  write_png_rgb(dir + "/a.png", rgb);
  auto pairs = list_scene_pairs(dir);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_NE(pairs[0].first.find("a.cube"), std::string::npos);
  EXPECT_NE(pairs[0].second.find("a.png"), std::string::npos);
  EXPECT_NE(pairs[1].first.find("b.cube"), std::string::npos);

  write_cube(dir + "/c.cube", cube);  // no matching png
  EXPECT_THROW(list_scene_pairs(dir), std::runtime_error);

  const std::string empty = temp_dir("pairs_empty");
  EXPECT_THROW(list_scene_pairs(empty), std::runtime_error);
}

TEST(Synth, DeterministicShapesAndSeeds) {
  SceneSpec spec;
  spec.seed = 5;
  spec.bands = 6;
  spec.h = 24;
  spec.w = 20;
  ScenePair a = synth_scene(spec);
  ASSERT_EQ(a.cube.shape(), (std::vector<int>{6, 24, 20}));
  ASSERT_EQ(a.rgb.shape(), (std::vector<int>{3, 24, 20}));
  ScenePair b = synth_scene(spec);
  EXPECT_TRUE(same_bits(a.cube, b.cube));
  EXPECT_TRUE(same_bits(a.rgb, b.rgb));
  spec.seed = 6;
  ScenePair c = synth_scene(spec);
  EXPECT_FALSE(same_bits(a.cube, c.cube));
}

TEST(Synth, NoiseFreeSceneHasPerMaterialSpectra) {
  SceneSpec spec;
  spec.seed = 7;
  spec.bands = 8;
  spec.h = spec.w = 32;
  spec.noise = 0.0f;
  ScenePair s = synth_scene(spec);
  // each noise-free pixel spectrum is a material signature scaled by the
  // intensity field, so max-normalized spectra collapse onto the palette
  std::set<std::string> distinct;
  const float* cube = s.cube.data();
  const int hw = 32 * 32;
  for (int px = 0; px < hw; ++px) {
    float peak = 0.0f;
    for (int l = 0; l < 8; ++l) peak = std::max(peak, cube[l * hw + px]);
    ASSERT_GT(peak, 0.0f);
    std::string key;
    for (int l = 0; l < 8; ++l) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.4f,", cube[l * hw + px] / peak);
      key += buf;
    }
    distinct.insert(key);
  }
  EXPECT_LE(distinct.size(), 8u);
  EXPECT_GE(distinct.size(), 2u);
  for (int i = 0; i < s.cube.size(); ++i) EXPECT_GE(cube[i], 0.0f);
  for (int i = 0; i < s.rgb.size(); ++i) {
    EXPECT_GE(s.rgb.data()[i], 0.0f);
    EXPECT_LE(s.rgb.data()[i], 1.0f);
  }
}

TEST(Synth, NoiseTouchesOnlyTheCube) {
  SceneSpec spec;
  spec.seed = 9;
  spec.bands = 4;
  spec.h = spec.w = 16;
  spec.noise = 0.0f;
  ScenePair clean = synth_scene(spec);
  spec.noise = 0.02f;
  ScenePair noisy = synth_scene(spec);
  EXPECT_TRUE(same_bits(clean.rgb, noisy.rgb));
  EXPECT_FALSE(same_bits(clean.cube, noisy.cube));
}

TEST(Synth, PaletteIsInjectiveAndNonnegative) {
  auto palette = make_palette(8, 8);
  ASSERT_EQ(palette.size(), 8u);
  for (size_t m = 0; m < palette.size(); ++m) {
    float peak = 0.0f;
    for (float v : palette[m].spectrum) {
      EXPECT_GE(v, 0.0f);
      peak = std::max(peak, v);
    }
    EXPECT_GT(peak, 0.5f);
    for (size_t n = m + 1; n < palette.size(); ++n) {
      float diff = 0.0f;
      for (int c = 0; c < 3; ++c)
        diff = std::max(diff, std::fabs(palette[m].color[c] - palette[n].color[c]));
      EXPECT_GT(diff, 1e-3f) << "materials " << m << " and " << n;
    }
  }
}

TEST(Synth, ValidatesSpec) {
  SceneSpec spec;
  spec.bands = 0;
  EXPECT_THROW(synth_scene(spec), std::invalid_argument);
  spec.bands = 4;
  spec.shapes = 2;
  EXPECT_THROW(synth_scene(spec), std::invalid_argument);
  spec.shapes = 9;
  EXPECT_THROW(synth_scene(spec), std::invalid_argument);
  spec.shapes = 5;
  EXPECT_NO_THROW(synth_scene(spec));
}

TEST(Config, CanonicalSerializationRoundTrips) {
  TrainConfig cfg;
  EXPECT_NO_THROW(validate_config(cfg));
  std::string text = serialize_config(cfg);
  TrainConfig back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(config_hash(back), config_hash(cfg));
}

TEST(Config, OverridesApplyAndReject) {
  TrainConfig cfg;
  apply_override(cfg, "lr=0.5");
  apply_override(cfg, "epochs=12");
  apply_override(cfg, "w_pix=7.5");
  apply_override(cfg, "seed=99");
  EXPECT_EQ(cfg.lr, 0.5);
  EXPECT_EQ(cfg.epochs, 12);
  EXPECT_EQ(cfg.weights.pix, 7.5);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_NE(config_hash(cfg), config_hash(TrainConfig{}));
  EXPECT_THROW(apply_override(cfg, "bogus=1"), std::invalid_argument);
  EXPECT_THROW(apply_override(cfg, "lr=abc"), std::invalid_argument);
  EXPECT_THROW(apply_override(cfg, "no_equals"), std::invalid_argument);
}

TEST(Config, ParsesCommentsAndReportsLineNumbers) {
  TrainConfig cfg = parse_config("# a comment\n\nlr = 0.25  # trailing\nepochs=3\n");
  EXPECT_EQ(cfg.lr, 0.25);
  EXPECT_EQ(cfg.epochs, 3);
  try {
    parse_config("lr=0.1\nepochs=2\nnot an assignment\n");
    FAIL() << "expected a parse error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, ValidationCatchesEachConstraint) {
  auto broken = [](auto&& tweak) {
    TrainConfig cfg;
    tweak(cfg);
    return cfg;
  };
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.epochs = 0; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.decay_start = 61; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.lr = 0; })), std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.batch = 0; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.crop = 30; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.crop = 0; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.stride = 0; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.stages_n = 0; })),
               std::invalid_argument);
  EXPECT_THROW(validate_config(broken([](TrainConfig& c) { c.head_width = 5; })),
               std::invalid_argument);
}

TEST(Config, LrScheduleHoldsThenDecaysLinearly) {
  TrainConfig cfg;  // epochs 60, decay_start 30, lr 1e-4
  EXPECT_EQ(lr_at(cfg, 0), 1e-4);
  EXPECT_EQ(lr_at(cfg, 29), 1e-4);
  EXPECT_NEAR(lr_at(cfg, 30), 1e-4, 1e-18);
  EXPECT_NEAR(lr_at(cfg, 45), 0.5e-4, 1e-18);
  EXPECT_NEAR(lr_at(cfg, 59), 1e-4 / 30.0, 1e-18);
  EXPECT_EQ(lr_at(cfg, 60), 0.0);

  cfg.epochs = 5;
  cfg.decay_start = 5;  // degenerate: constant until the very end
  EXPECT_NO_THROW(validate_config(cfg));
  EXPECT_EQ(lr_at(cfg, 4), 1e-4);
  EXPECT_EQ(lr_at(cfg, 5), 0.0);
}

TEST(Checkpoint, SaveLoadRoundTripAndArchInference) {
  const std::string dir = temp_dir("ckpt_rt");
  Rng rng(3);
  ParamSet<float> gen_ps;
  MtsicParams<float> gen = make_mtsic(gen_ps, 5, 2, 8, 2, 4, rng);
  ParamSet<float> disc_ps;
  DiscParams<float> disc = make_discriminator(disc_ps, 5, 2, 2, rng);
  (void)gen;
  (void)disc;
  const std::string path = dir + "/a.mtck";
  save_checkpoint<float>(path, {&gen_ps, &disc_ps}, 0xfeedfacecafebeefull);

  CheckpointData ck = read_checkpoint(path);
  EXPECT_EQ(ck.config_hash, 0xfeedfacecafebeefull);
  EXPECT_EQ(ck.tensors.size(), gen_ps.items.size() + disc_ps.items.size());

  ArchInfo arch = infer_arch(ck);
  EXPECT_EQ(arch.bands, 5);
  EXPECT_EQ(arch.base, 2);
  EXPECT_EQ(arch.dim, 8);
  EXPECT_EQ(arch.stages_n, 2);
  EXPECT_EQ(arch.head_width, 4);

  Rng rng2(77);  // different initialization, overwritten by the load
  ParamSet<float> fresh;
  make_mtsic(fresh, 5, 2, 8, 2, 4, rng2);
  load_into(ck, fresh);
  for (const auto& item : fresh.items) {
    Tensor<float>* orig = gen_ps.find(item.name);
    ASSERT_NE(orig, nullptr) << item.name;
    EXPECT_TRUE(same_bits(item.t, *orig)) << item.name;
  }
}

TEST(Checkpoint, LoadIntoValidatesNamesAndShapes) {
  const std::string dir = temp_dir("ckpt_bad");
  Rng rng(3);
  ParamSet<float> gen_ps;
  make_mtsic(gen_ps, 5, 2, 8, 1, 4, rng);
  const std::string path = dir + "/a.mtck";
  save_checkpoint<float>(path, {&gen_ps}, 1);
  CheckpointData ck = read_checkpoint(path);

  ParamSet<float> extra;
  make_mtsic(extra, 5, 2, 8, 1, 4, rng);
  extra.add("not_in_file", Tensor<float>::zeros({2, 2}));
  EXPECT_THROW(load_into(ck, extra), std::runtime_error);

  ParamSet<float> wrong;
  make_mtsic(wrong, 5, 2, 12, 1, 4, rng);  // different dim
  EXPECT_THROW(load_into(ck, wrong), std::runtime_error);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const std::string dir = temp_dir("ckpt_corrupt");
  std::ofstream(dir + "/bad.mtck", std::ios::binary) << "XXXXgarbage";
  EXPECT_THROW(read_checkpoint(dir + "/bad.mtck"), std::runtime_error);

  Rng rng(3);
  ParamSet<float> ps;
  make_mtsic(ps, 5, 2, 8, 1, 4, rng);
  const std::string path = dir + "/a.mtck";
  save_checkpoint<float>(path, {&ps}, 1);
  std::string bytes = slurp(path);
  std::ofstream(dir + "/short.mtck", std::ios::binary)
      << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(read_checkpoint(dir + "/short.mtck"), std::runtime_error);
}

TEST(PatchSampler, GridCountClosedForms) {
  EXPECT_EQ(patch_grid_count(354, 256, 24), 5);  // 25 patches on a square scene
  EXPECT_EQ(patch_grid_count(96, 32, 32), 3);    // stride = crop tiles exactly
  EXPECT_EQ(patch_grid_count(64, 32, 24), 2);
  EXPECT_EQ(patch_grid_count(32, 32, 24), 1);
  EXPECT_THROW(patch_grid_count(31, 32, 24), std::invalid_argument);
  EXPECT_THROW(patch_grid_count(64, 32, 0), std::invalid_argument);
}

TEST(PatchSampler, AugmentationKeepsPairsAligned) {
  // a coordinate-grid scene: if the cube and rgb went through different
  // geometry the interpolated coordinates would disagree bit-for-bit
  const int h = 40, w = 48;
  SceneData<double> scene;
  scene.cube = Tensor<double>::zeros({2, h, w});
  scene.rgb = Tensor<double>::zeros({2, h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      scene.cube.at({0, i, j}) = i / double(h);
      scene.cube.at({1, i, j}) = j / double(w);
    }
  std::memcpy(scene.rgb.data(), scene.cube.data(), sizeof(double) * 2 * h * w);

  Rng rng(123);
  for (int gi = 0; gi < patch_grid_count(h, 16, 8); ++gi)
    for (int gj = 0; gj < patch_grid_count(w, 16, 8); ++gj) {
      PatchPair<double> p = sample_patch(scene, gi, gj, 16, 8, rng);
      ASSERT_EQ(p.cube.shape(), (std::vector<int>{2, 16, 16}));
      ASSERT_EQ(p.rgb.shape(), (std::vector<int>{2, 16, 16}));
      EXPECT_TRUE(same_bits(p.cube, p.rgb));
    }

  Rng r1(9), r2(9);
  PatchPair<double> a = sample_patch(scene, 1, 1, 16, 8, r1);
  PatchPair<double> b = sample_patch(scene, 1, 1, 16, 8, r2);
  EXPECT_TRUE(same_bits(a.cube, b.cube));
}

TEST(PatchSampler, Rot90ClosedForm) {
  Tensor<double> x = Tensor<double>::zeros({1, 2, 3});
  for (int i = 0; i < 6; ++i) x.data()[i] = i;  // rows (0 1 2) and (3 4 5)
  Tensor<double> r = rot90(x, 1);
  ASSERT_EQ(r.shape(), (std::vector<int>{1, 3, 2}));
  // clockwise: first output row is the first input column bottom-up
  EXPECT_EQ(r.at({0, 0, 0}), 3.0);
  EXPECT_EQ(r.at({0, 0, 1}), 0.0);
  EXPECT_EQ(r.at({0, 1, 0}), 4.0);
  EXPECT_EQ(r.at({0, 1, 1}), 1.0);
  EXPECT_EQ(r.at({0, 2, 0}), 5.0);
  EXPECT_EQ(r.at({0, 2, 1}), 2.0);
  EXPECT_TRUE(same_bits(rot90(x, 4), x));
  EXPECT_TRUE(same_bits(rot90(x, 0), x));
  EXPECT_TRUE(same_bits(rot90(rot90(x, 1), 3), x));
}

TEST(Adam, ConstantGradientStepsAtUnitScale) {
  ParamSet<double> ps;
  Tensor<double> w = ps.add("w", Tensor<double>::full({1}, 0.5));
  Tensor<double> buf = ps.add_buffer("buf", Tensor<double>::full({1}, 3.0));
  Adam<double> adam(0.5, 0.999);

  // constant gradient g: bias correction makes m_hat = g and v_hat = g^2,
  // so every step moves by lr * g / (|g| + eps)
  const double g = 2.0, lr = 0.1, eps = 1e-8;
  const double step = lr * g / (g + eps);
  w.zero_grad();
  w.grad()[0] = g;
  adam.step(ps, lr);
  EXPECT_NEAR(w.data()[0], 0.5 - step, 1e-15);
  w.zero_grad();
  w.grad()[0] = g;
  adam.step(ps, lr);
  EXPECT_NEAR(w.data()[0], 0.5 - 2 * step, 1e-14);
  EXPECT_EQ(buf.data()[0], 3.0);  // buffers are not optimized
}

TEST(TrainLoop, SmokeRunWritesArtifacts) {
  const std::string data = temp_dir("train_smoke_data");
  make_data_dir(data, 3, 5, 48, 100);
  const std::string out = temp_dir("train_smoke_out");
  TrainConfig cfg = tiny_config();

  TrainResult<float> result = train<float>(cfg, data, out);
  // 3 scenes x 1 patch x 2 epochs
  ASSERT_EQ(result.reports.size(), 6u);
  ASSERT_EQ(result.d_trace.size(), 6u);
  for (const auto& r : result.reports) {
    EXPECT_TRUE(std::isfinite(r.total));
    EXPECT_GT(r.total, 0.0f);
    EXPECT_GE(r.pix, 0.0f);
  }
  EXPECT_TRUE(fs::exists(out + "/train.log"));
  EXPECT_TRUE(fs::exists(out + "/epoch_0001.mtck"));
  EXPECT_TRUE(fs::exists(out + "/epoch_0002.mtck"));
  EXPECT_TRUE(fs::exists(out + "/final.mtck"));

  std::string log = slurp(out + "/train.log");
  int lines = 0;
  for (char c : log) lines += c == '\n';
  EXPECT_EQ(lines, 6);
  EXPECT_EQ(log.rfind("iter=1 epoch=0 lr=0.001 ", 0), 0u) << log.substr(0, 80);
  for (const char* field : {" d=", " cgan=", " pix=", " sam=", " fft=", " edge=", " per=",
                            " tv=", " ssim=", " total="})
    EXPECT_NE(log.find(field), std::string::npos) << field;
}

TEST(TrainLoop, SeededRunsAreByteIdentical) {
  const std::string data = temp_dir("train_det_data");
  make_data_dir(data, 2, 4, 48, 40);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  const std::string out1 = temp_dir("train_det_out1");
  const std::string out2 = temp_dir("train_det_out2");

  TrainResult<double> a = train<double>(cfg, data, out1);
  TrainResult<double> b = train<double>(cfg, data, out2);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].total, b.reports[i].total);
    EXPECT_EQ(a.reports[i].pix, b.reports[i].pix);
    EXPECT_EQ(a.d_trace[i], b.d_trace[i]);
  }
  EXPECT_EQ(slurp(out1 + "/train.log"), slurp(out2 + "/train.log"));
  EXPECT_EQ(slurp(out1 + "/final.mtck"), slurp(out2 + "/final.mtck"));
}

TEST(TrainLoop, BatchGroupsPatchesIntoOneStep) {
  const std::string data = temp_dir("train_batch_data");
  make_data_dir(data, 2, 4, 48, 60);
  const std::string out = temp_dir("train_batch_out");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.batch = 2;
  TrainResult<float> result = train<float>(cfg, data, out);
  EXPECT_EQ(result.reports.size(), 1u);  // two patches, one accumulated step
}

TEST(TrainLoop, AbortsNamingTheFirstNonFiniteTerm) {
  const std::string data = temp_dir("train_nan_data");
  make_data_dir(data, 1, 4, 48, 80);
  // poison an entire band so every possible crop sees a NaN; all loss terms
  // go non-finite and the abort must name the first one in report order
  Tensor<float> cube = read_cube(data + "/scene_0000.cube");
  const int hw = cube.dim(1) * cube.dim(2);
  for (int i = 0; i < hw; ++i) cube.data()[i] = std::numeric_limits<float>::quiet_NaN();
  write_cube(data + "/scene_0000.cube", cube);

  const std::string out = temp_dir("train_nan_out");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  try {
    train<float>(cfg, data, out);
    FAIL() << "expected the non-finite abort";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("iteration 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("not finite"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'d'"), std::string::npos) << msg;
  }
}

TEST(TrainLoop, RejectsUndersizedScenes) {
  const std::string data = temp_dir("train_small_data");
  make_data_dir(data, 1, 4, 24, 90);  // smaller than the 32 crop
  TrainConfig cfg = tiny_config();
  EXPECT_THROW(train<float>(cfg, data, temp_dir("train_small_out")), std::runtime_error);
}

TEST(Evaluate, ReportShapeAndThreadInvariance) {
  const std::string data = temp_dir("eval_data");
  make_data_dir(data, 3, 5, 48, 120);
  const std::string out = temp_dir("eval_out");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  TrainResult<float> trained = train<float>(cfg, data, out);

  MetricReport rep1 = evaluate_dir<float>(trained.final_checkpoint, data, 1);
  ASSERT_EQ(rep1.rows.size(), 3u);
  for (const auto& row : rep1.rows) {
    EXPECT_TRUE(std::isfinite(row.psnr));
    EXPECT_GE(row.colorjsd, 0.0);
    EXPECT_LE(row.colorjsd, 1.0);
    EXPECT_LE(row.ssim, 1.0 + 1e-9);
  }
  MetricReport rep2 = evaluate_dir<float>(trained.final_checkpoint, data, 2);
  for (size_t i = 0; i < rep1.rows.size(); ++i) {
    EXPECT_EQ(rep1.rows[i].psnr, rep2.rows[i].psnr);
    EXPECT_EQ(rep1.rows[i].colorjsd, rep2.rows[i].colorjsd);
  }
  std::string text = format_report(rep1);
  int lines = 0;
  for (char c : text) lines += c == '\n';
  EXPECT_EQ(lines, 4);  // one per pair plus the aggregate
  EXPECT_NE(text.find("aggregate psnr="), std::string::npos);
}

TEST(Evaluate, LoadGeneratorRebuildsTheTrainedArchitecture) {
  const std::string data = temp_dir("loadgen_data");
  make_data_dir(data, 1, 6, 48, 140);
  const std::string out = temp_dir("loadgen_out");
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.stages_n = 2;
  TrainResult<float> trained = train<float>(cfg, data, out);

  ParamSet<float> ps;
  MtsicParams<float> gen = load_generator<float>(trained.final_checkpoint, ps);
  EXPECT_EQ(gen.bands, 6);
  EXPECT_EQ(gen.base, cfg.base);
  EXPECT_EQ(gen.dim, cfg.dim);
  EXPECT_EQ(gen.stages_n, 2);
  EXPECT_EQ(gen.head_width, cfg.head_width);

  Tensor<float> cube = read_cube(data + "/scene_0000.cube");
  Tensor<float> rgb = colorize_cube(cube, gen);
  ASSERT_EQ(rgb.shape(), (std::vector<int>{3, 48, 48}));
  for (int i = 0; i < rgb.size(); ++i) {
    EXPECT_GE(rgb.data()[i], 0.0f);
    EXPECT_LE(rgb.data()[i], 1.0f);
  }
}

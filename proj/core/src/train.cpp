#include "mtsic/train.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mtsic/checkpoint.hpp"
#include "mtsic/io.hpp"
#include "mtsic/ops.hpp"

namespace mtsic {

namespace {

// discriminator scale count is fixed: together with the stride-2 input conv
// it needs crop divisible by 8, which the config already guarantees
constexpr int kDiscScales = 2;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename S>
Tensor<S> cast_from_float(const Tensor<float>& t) {
  Tensor<S> out = Tensor<S>::zeros(t.shape());
  const float* src = t.data();
  S* dst = out.data();
  for (long long i = 0; i < t.size(); ++i) dst[i] = static_cast<S>(src[i]);
  return out;
}

}  // namespace

template <typename S>
std::vector<SceneData<S>> load_scenes(const std::string& dir) {
  std::vector<SceneData<S>> scenes;
  for (const auto& [cube_path, png_path] : list_scene_pairs(dir)) {
    SceneData<S> s;
    s.cube = cast_from_float<S>(read_cube(cube_path));
    s.rgb = cast_from_float<S>(read_png_rgb(png_path));
    S* p = s.rgb.data();
    for (long long i = 0; i < s.rgb.size(); ++i) p[i] = S(2) * p[i] - S(1);
    if (s.cube.rank() != 3 || s.rgb.rank() != 3 || s.cube.dim(1) != s.rgb.dim(1) ||
        s.cube.dim(2) != s.rgb.dim(2))
      throw std::runtime_error("scene pair extents disagree: " + cube_path);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

template <typename S>
Tensor<S> rot90(const Tensor<S>& chw, int quarter_turns) {
  if (chw.rank() != 3) throw std::invalid_argument("rot90 wants a {C,H,W} tensor");
  int k = ((quarter_turns % 4) + 4) % 4;
  Tensor<S> cur = chw;
  while (k-- > 0) {
    const int c = cur.dim(0), h = cur.dim(1), w = cur.dim(2);
    Tensor<S> next = Tensor<S>::zeros({c, w, h});
    const S* src = cur.data();
    S* dst = next.data();
    // one clockwise quarter turn: out(i, j) = in(h - 1 - j, i)
    for (int m = 0; m < c; ++m)
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < h; ++j)
          dst[(static_cast<long long>(m) * w + i) * h + j] =
              src[(static_cast<long long>(m) * h + (h - 1 - j)) * w + i];
    cur = next;
  }
  return cur;
}

int patch_grid_count(int extent, int crop, int stride) {
  if (extent < crop) throw std::invalid_argument("image smaller than the crop size");
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  return (extent - crop) / stride + 1;
}

template <typename S>
PatchPair<S> sample_patch(const SceneData<S>& scene, int gi, int gj, int crop, int stride,
                          Rng& rng) {
  const int h = scene.cube.dim(1), w = scene.cube.dim(2);
  // draw order is part of the determinism contract: scale, row jitter,
  // column jitter, rotation
  double lo = 0.8;
  if (static_cast<double>(crop) / h > lo) lo = static_cast<double>(crop) / h;
  if (static_cast<double>(crop) / w > lo) lo = static_cast<double>(crop) / w;
  const double scale = rng.uniform(lo, 1.2);
  const int ji = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(stride)));
  const int jj = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(stride)));
  const int rot = static_cast<int>(rng.uniform_int(4));

  int hs = static_cast<int>(std::lround(h * scale));
  int ws = static_cast<int>(std::lround(w * scale));
  if (hs < crop) hs = crop;
  if (ws < crop) ws = crop;

  auto place = [&](int g, int jitter, int extent) {
    int base = static_cast<int>(std::lround(g * stride * scale));
    int pos = base + jitter - stride / 2;
    if (pos < 0) pos = 0;
    if (pos > extent - crop) pos = extent - crop;
    return pos;
  };
  const int i0 = place(gi, ji, hs);
  const int j0 = place(gj, jj, ws);

  PatchPair<S> out;
  out.cube = rot90(
      crop_spatial(resize_bilinear(scene.cube, hs, ws), i0, i0 + crop, j0, j0 + crop), rot);
  out.rgb = rot90(
      crop_spatial(resize_bilinear(scene.rgb, hs, ws), i0, i0 + crop, j0, j0 + crop), rot);
  return out;
}

template <typename S>
void Adam<S>::step(ParamSet<S>& ps, S lr) {
  if (m.size() != ps.items.size()) {
    m.assign(ps.items.size(), {});
    v.assign(ps.items.size(), {});
  }
  ++step_count;
  const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), step_count));
  const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), step_count));
  for (size_t k = 0; k < ps.items.size(); ++k) {
    auto& item = ps.items[k];
    if (!item.trainable) continue;
    const long long n = item.t.size();
    if (m[k].empty()) {
      m[k].assign(static_cast<size_t>(n), S(0));
      v[k].assign(static_cast<size_t>(n), S(0));
    }
    S* p = item.t.data();
    S* g = item.t.grad();
    S* mk = m[k].data();
    S* vk = v[k].data();
    for (long long i = 0; i < n; ++i) {
      mk[i] = beta1 * mk[i] + (S(1) - beta1) * g[i];
      vk[i] = beta2 * vk[i] + (S(1) - beta2) * g[i] * g[i];
      p[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + eps);
    }
  }
}

namespace {

// bounded FIFO handing augmented patches from the producer thread to the
// training loop; ownership moves through the queue, and a stop flag lets the
// consumer abandon the producer mid-epoch
template <typename S>
struct PatchQueue {
  std::mutex mu;
  std::condition_variable cv_space, cv_item;
  std::deque<PatchPair<S>> q;
  std::exception_ptr err;
  bool stop = false;
  static constexpr size_t kCap = 4;

  // returns false when the consumer asked the producer to stop
  bool push(PatchPair<S>&& p) {
    std::unique_lock<std::mutex> lk(mu);
    cv_space.wait(lk, [&] { return q.size() < kCap || stop; });
    if (stop) return false;
    q.push_back(std::move(p));
    cv_item.notify_one();
    return true;
  }
  void fail(std::exception_ptr e) {
    std::lock_guard<std::mutex> lk(mu);
    err = e;
    cv_item.notify_all();
  }
  PatchPair<S> pop() {
    std::unique_lock<std::mutex> lk(mu);
    cv_item.wait(lk, [&] { return !q.empty() || err; });
    if (q.empty() && err) std::rethrow_exception(err);
    PatchPair<S> p = std::move(q.front());
    q.pop_front();
    cv_space.notify_one();
    return p;
  }
  void shut_down() {
    std::lock_guard<std::mutex> lk(mu);
    stop = true;
    cv_space.notify_all();
  }
};

}  // namespace

template <typename S>
TrainResult<S> train(const TrainConfig& cfg, const std::string& data_dir,
                     const std::string& out_dir, std::ostream* echo_log) {
  validate_config(cfg);
  std::vector<SceneData<S>> scenes = load_scenes<S>(data_dir);
  const int bands = scenes[0].cube.dim(0);
  for (const auto& s : scenes) {
    if (s.cube.dim(0) != bands) throw std::runtime_error("scenes disagree on band count");
    if (s.cube.dim(1) < cfg.crop || s.cube.dim(2) < cfg.crop)
      throw std::runtime_error("scene smaller than the crop size");
  }

  long long patches_per_epoch = 0;
  for (const auto& s : scenes)
    patches_per_epoch +=
        static_cast<long long>(patch_grid_count(s.cube.dim(1), cfg.crop, cfg.stride)) *
        patch_grid_count(s.cube.dim(2), cfg.crop, cfg.stride);
  const long long batches_per_epoch = patches_per_epoch / cfg.batch;
  if (batches_per_epoch < 1) throw std::runtime_error("batch size exceeds patches per epoch");
  const long long used_per_epoch = batches_per_epoch * cfg.batch;

  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng aug_rng = root.split(1);

  ParamSet<S> gen_ps;
  MtsicParams<S> gen =
      make_mtsic(gen_ps, bands, cfg.base, cfg.dim, cfg.stages_n, cfg.head_width, init_rng);
  ParamSet<S> disc_ps;
  DiscParams<S> disc = make_discriminator(disc_ps, bands, cfg.base, kDiscScales, init_rng);

  Adam<S> adam_g(static_cast<S>(cfg.beta1), static_cast<S>(cfg.beta2));
  Adam<S> adam_d(static_cast<S>(cfg.beta1), static_cast<S>(cfg.beta2));
  LossWeights<S> w;
  w.cgan = static_cast<S>(cfg.weights.cgan);
  w.pix = static_cast<S>(cfg.weights.pix);
  w.sam = static_cast<S>(cfg.weights.sam);
  w.fft = static_cast<S>(cfg.weights.fft);
  w.edge = static_cast<S>(cfg.weights.edge);
  w.per = static_cast<S>(cfg.weights.per);
  w.tv = static_cast<S>(cfg.weights.tv);
  w.ssim = static_cast<S>(cfg.weights.ssim);

  std::filesystem::create_directories(out_dir);
  const std::string log_path = out_dir + "/train.log";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot open training log: " + log_path);

  PatchQueue<S> queue;
  std::thread producer([&] {
    try {
      for (int e = 0; e < cfg.epochs; ++e) {
        long long produced = 0;
        for (size_t s = 0; s < scenes.size() && produced < used_per_epoch; ++s) {
          const int rows = patch_grid_count(scenes[s].cube.dim(1), cfg.crop, cfg.stride);
          const int cols = patch_grid_count(scenes[s].cube.dim(2), cfg.crop, cfg.stride);
          for (int gi = 0; gi < rows && produced < used_per_epoch; ++gi)
            for (int gj = 0; gj < cols && produced < used_per_epoch; ++gj) {
              PatchPair<S> p = sample_patch(scenes[s], gi, gj, cfg.crop, cfg.stride, aug_rng);
              ++produced;
              if (!queue.push(std::move(p))) return;
            }
        }
      }
    } catch (...) {
      queue.fail(std::current_exception());
    }
  });
  struct ProducerGuard {
    PatchQueue<S>& q;
    std::thread& t;
    ~ProducerGuard() {
      q.shut_down();
      if (t.joinable()) t.join();
    }
  } guard{queue, producer};

  const uint64_t hash = config_hash(cfg);
  TrainResult<S> result;
  result.log_path = log_path;
  const S inv_b = S(1) / static_cast<S>(cfg.batch);
  Tensor<S> inv_batch = Tensor<S>::full({1}, inv_b);
  long long iter = 0;

  for (int e = 0; e < cfg.epochs; ++e) {
    const double lr_sched = lr_at(cfg, e);  // logged at schedule precision
    const S lr = static_cast<S>(lr_sched);
    for (long long b = 0; b < batches_per_epoch; ++b) {
      ++iter;
      std::vector<PatchPair<S>> batch;
      batch.reserve(cfg.batch);
      GradTape<S> tape_g;
      std::vector<Tensor<S>> fakes;
      fakes.reserve(cfg.batch);
      for (int i = 0; i < cfg.batch; ++i) {
        batch.push_back(queue.pop());
        fakes.push_back(mtsic_forward(batch.back().cube, gen, true, &tape_g));
      }

      disc_ps.zero_grad();
      GradTape<S> tape_d;
      Tensor<S> d_total;
      for (int i = 0; i < cfg.batch; ++i) {
        DiscOutput<S> real = disc_forward(batch[i].rgb, batch[i].cube, disc, &tape_d);
        DiscOutput<S> fake = disc_forward(fakes[i].detach(), batch[i].cube, disc, &tape_d);
        CganPair<S> pair = cgan_losses(real.scores, fake.scores, &tape_d);
        Tensor<S> term = mul(pair.loss_d, inv_batch, &tape_d);
        d_total = d_total.defined() ? add(d_total, term, &tape_d) : term;
      }
      tape_d.backward(d_total);
      adam_d.step(disc_ps, lr);
      const S d_value = d_total.data()[0];

      gen_ps.zero_grad();
      Tensor<S> g_total;
      LossReport<S> rep;
      for (int i = 0; i < cfg.batch; ++i) {
        LossTerms<S> terms = generator_loss(fakes[i], batch[i].rgb, batch[i].cube, disc, w, &tape_g);
        Tensor<S> term = mul(terms.total, inv_batch, &tape_g);
        g_total = g_total.defined() ? add(g_total, term, &tape_g) : term;
        LossReport<S> r = report_from(terms);
        rep.cgan += r.cgan * inv_b;
        rep.pix += r.pix * inv_b;
        rep.sam += r.sam * inv_b;
        rep.fft += r.fft * inv_b;
        rep.edge += r.edge * inv_b;
        rep.per += r.per * inv_b;
        rep.tv += r.tv * inv_b;
        rep.ssim += r.ssim * inv_b;
        rep.total += r.total * inv_b;
      }
      tape_g.backward(g_total);
      adam_g.step(gen_ps, lr);

      const std::pair<const char*, S> terms_in_order[] = {
          {"d", d_value},     {"cgan", rep.cgan}, {"pix", rep.pix},
          {"sam", rep.sam},   {"fft", rep.fft},   {"edge", rep.edge},
          {"per", rep.per},   {"tv", rep.tv},     {"ssim", rep.ssim},
          {"total", rep.total}};
      for (const auto& [name, value] : terms_in_order)
        if (!std::isfinite(static_cast<double>(value)))
          throw std::runtime_error("training aborted at iteration " + std::to_string(iter) +
                                   ": loss term '" + name + "' is not finite");

      std::string line = "iter=" + std::to_string(iter) + " epoch=" + std::to_string(e) +
                         " lr=" + fmt_g(lr_sched);
      for (const auto& [name, value] : terms_in_order)
        line += std::string(" ") + name + "=" + fmt_g(static_cast<double>(value));
      line += "\n";
      log << line;
      if (echo_log) (*echo_log) << line;

      result.reports.push_back(rep);
      result.d_trace.push_back(d_value);
    }

    char name[32];
    std::snprintf(name, sizeof(name), "/epoch_%04d.mtck", e + 1);
    save_checkpoint<S>(out_dir + name, {&gen_ps, &disc_ps}, hash);
  }

  result.final_checkpoint = out_dir + "/final.mtck";
  save_checkpoint<S>(result.final_checkpoint, {&gen_ps, &disc_ps}, hash);
  log.flush();
  if (!log) throw std::runtime_error("training log write failed: " + log_path);
  return result;
}

template std::vector<SceneData<float>> load_scenes<float>(const std::string&);
template std::vector<SceneData<double>> load_scenes<double>(const std::string&);
template Tensor<float> rot90<float>(const Tensor<float>&, int);
template Tensor<double> rot90<double>(const Tensor<double>&, int);
template PatchPair<float> sample_patch<float>(const SceneData<float>&, int, int, int, int, Rng&);
template PatchPair<double> sample_patch<double>(const SceneData<double>&, int, int, int, int,
                                                Rng&);
template struct Adam<float>;
template struct Adam<double>;
template TrainResult<float> train<float>(const TrainConfig&, const std::string&,
                                         const std::string&, std::ostream*);
template TrainResult<double> train<double>(const TrainConfig&, const std::string&,
                                           const std::string&, std::ostream*);

}  // namespace mtsic

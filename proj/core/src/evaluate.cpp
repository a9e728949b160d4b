#include "mtsic/evaluate.hpp"

#include <cstdio>
#include <stdexcept>
#include <thread>

#include "mtsic/checkpoint.hpp"

namespace mtsic {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

template <typename S>
MtsicParams<S> load_generator(const std::string& checkpoint_path, ParamSet<S>& ps) {
  CheckpointData ck = read_checkpoint(checkpoint_path);
  ArchInfo a = infer_arch(ck);
  Rng rng(0);  // initialization is overwritten by the checkpoint below
  MtsicParams<S> gen = make_mtsic(ps, a.bands, a.base, a.dim, a.stages_n, a.head_width, rng);
  load_into(ck, ps);
  return gen;
}

template <typename S>
Tensor<S> colorize_cube(const Tensor<S>& cube, MtsicParams<S>& gen) {
  Tensor<S> out = mtsic_forward(cube, gen, false, static_cast<GradTape<S>*>(nullptr));
  Tensor<S> rgb = Tensor<S>::zeros(out.shape());
  const S* src = out.data();
  S* dst = rgb.data();
  for (long long i = 0; i < out.size(); ++i) {
    S v = (src[i] + S(1)) / S(2);
    dst[i] = v < S(0) ? S(0) : (v > S(1) ? S(1) : v);
  }
  return rgb;
}

template <typename S>
MetricReport evaluate_pairs(MtsicParams<S>& gen, const std::vector<SceneData<S>>& scenes,
                            int threads) {
  if (scenes.empty()) throw std::invalid_argument("no scenes to evaluate");
  if (threads < 1) threads = 1;
  if (static_cast<size_t>(threads) > scenes.size()) threads = static_cast<int>(scenes.size());

  MetricReport report;
  report.rows.resize(scenes.size());
  auto score_one = [&](size_t i) {
    Tensor<S> rgb = colorize_cube(scenes[i].cube, gen);
    Tensor<S> gt = Tensor<S>::zeros(scenes[i].rgb.shape());
    const S* src = scenes[i].rgb.data();
    S* dst = gt.data();
    for (long long k = 0; k < gt.size(); ++k) dst[k] = (src[k] + S(1)) / S(2);
    report.rows[i] = metric_row(rgb, gt);
  };

  if (threads == 1) {
    for (size_t i = 0; i < scenes.size(); ++i) score_one(i);
  } else {
    // eval-mode forwards share read-only parameters; each worker writes a
    // disjoint set of rows
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (size_t i = static_cast<size_t>(t); i < scenes.size();
             i += static_cast<size_t>(threads))
          score_one(i);
      });
    for (auto& th : pool) th.join();
  }
  report.aggregate = aggregate_rows(report.rows);
  return report;
}

template <typename S>
MetricReport evaluate_dir(const std::string& checkpoint_path, const std::string& data_dir,
                          int threads) {
  ParamSet<S> ps;
  MtsicParams<S> gen = load_generator<S>(checkpoint_path, ps);
  std::vector<SceneData<S>> scenes = load_scenes<S>(data_dir);
  return evaluate_pairs(gen, scenes, threads);
}

std::string format_report(const MetricReport& report) {
  std::string out;
  auto line = [](const std::string& head, const MetricRow& r) {
    return head + " psnr=" + fmt_g(r.psnr) + " ssim=" + fmt_g(r.ssim) + " uiqi=" + fmt_g(r.uiqi) +
           " colorful=" + fmt_g(r.colorful) + " colorjsd=" + fmt_g(r.colorjsd) + "\n";
  };
  for (size_t i = 0; i < report.rows.size(); ++i)
    out += line("pair=" + std::to_string(i), report.rows[i]);
  out += line("aggregate", report.aggregate);
  return out;
}

template MtsicParams<float> load_generator<float>(const std::string&, ParamSet<float>&);
template MtsicParams<double> load_generator<double>(const std::string&, ParamSet<double>&);
template Tensor<float> colorize_cube<float>(const Tensor<float>&, MtsicParams<float>&);
template Tensor<double> colorize_cube<double>(const Tensor<double>&, MtsicParams<double>&);
template MetricReport evaluate_pairs<float>(MtsicParams<float>&,
                                            const std::vector<SceneData<float>>&, int);
template MetricReport evaluate_pairs<double>(MtsicParams<double>&,
                                             const std::vector<SceneData<double>>&, int);
template MetricReport evaluate_dir<float>(const std::string&, const std::string&, int);
template MetricReport evaluate_dir<double>(const std::string&, const std::string&, int);

}  // namespace mtsic

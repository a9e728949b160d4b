#include "mtsic/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mtsic {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  return d;
}

int parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long n;
  try {
    n = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  return int(n);
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  size_t pos = 0;
  unsigned long long n;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  return uint64_t(n);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("config: epochs must be positive");
  if (cfg.decay_start < 1 || cfg.decay_start > cfg.epochs)
    throw std::invalid_argument("config: decay_start must lie in [1, epochs]");
  if (cfg.lr <= 0) throw std::invalid_argument("config: lr must be positive");
  if (cfg.batch < 1) throw std::invalid_argument("config: batch must be positive");
  if (cfg.crop < 8 || cfg.crop % 8 != 0)
    throw std::invalid_argument("config: crop must be a positive multiple of 8");
  if (cfg.stride < 1) throw std::invalid_argument("config: stride must be positive");
  if (cfg.stages_n < 1) throw std::invalid_argument("config: stages must be positive");
  if (cfg.base < 1 || cfg.dim < 1 || cfg.head_width < 1)
    throw std::invalid_argument("config: channel widths must be positive");
  if (cfg.dim % cfg.head_width != 0 || (2 * cfg.dim) % cfg.head_width != 0)
    throw std::invalid_argument("config: head_width must divide dim and 2*dim");
}

void apply_override(TrainConfig& cfg, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config: expected key=value, got '" + assignment + "'");
  std::string key = trim(assignment.substr(0, eq));
  std::string val = trim(assignment.substr(eq + 1));
  if (key == "epochs")
    cfg.epochs = parse_int(key, val);
  else if (key == "lr")
    cfg.lr = parse_double(key, val);
  else if (key == "decay_start")
    cfg.decay_start = parse_int(key, val);
  else if (key == "batch")
    cfg.batch = parse_int(key, val);
  else if (key == "beta1")
    cfg.beta1 = parse_double(key, val);
  else if (key == "beta2")
    cfg.beta2 = parse_double(key, val);
  else if (key == "crop")
    cfg.crop = parse_int(key, val);
  else if (key == "stride")
    cfg.stride = parse_int(key, val);
  else if (key == "stages")
    cfg.stages_n = parse_int(key, val);
  else if (key == "base")
    cfg.base = parse_int(key, val);
  else if (key == "dim")
    cfg.dim = parse_int(key, val);
  else if (key == "head_width")
    cfg.head_width = parse_int(key, val);
  else if (key == "w_cgan")
    cfg.weights.cgan = parse_double(key, val);
  else if (key == "w_pix")
    cfg.weights.pix = parse_double(key, val);
  else if (key == "w_sam")
    cfg.weights.sam = parse_double(key, val);
  else if (key == "w_fft")
    cfg.weights.fft = parse_double(key, val);
  else if (key == "w_edge")
    cfg.weights.edge = parse_double(key, val);
  else if (key == "w_per")
    cfg.weights.per = parse_double(key, val);
  else if (key == "w_tv")
    cfg.weights.tv = parse_double(key, val);
  else if (key == "w_ssim")
    cfg.weights.ssim = parse_double(key, val);
  else if (key == "seed")
    cfg.seed = parse_u64(key, val);
  else
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (line " + std::to_string(lineno) +
                                  ")");
    }
  }
  return cfg;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "epochs=" << cfg.epochs << "\n";
  out << "lr=" << fmt_double(cfg.lr) << "\n";
  out << "decay_start=" << cfg.decay_start << "\n";
  out << "batch=" << cfg.batch << "\n";
  out << "beta1=" << fmt_double(cfg.beta1) << "\n";
  out << "beta2=" << fmt_double(cfg.beta2) << "\n";
  out << "crop=" << cfg.crop << "\n";
  out << "stride=" << cfg.stride << "\n";
  out << "stages=" << cfg.stages_n << "\n";
  out << "base=" << cfg.base << "\n";
  out << "dim=" << cfg.dim << "\n";
  out << "head_width=" << cfg.head_width << "\n";
  out << "w_cgan=" << fmt_double(cfg.weights.cgan) << "\n";
  out << "w_pix=" << fmt_double(cfg.weights.pix) << "\n";
  out << "w_sam=" << fmt_double(cfg.weights.sam) << "\n";
  out << "w_fft=" << fmt_double(cfg.weights.fft) << "\n";
  out << "w_edge=" << fmt_double(cfg.weights.edge) << "\n";
  out << "w_per=" << fmt_double(cfg.weights.per) << "\n";
  out << "w_tv=" << fmt_double(cfg.weights.tv) << "\n";
  out << "w_ssim=" << fmt_double(cfg.weights.ssim) << "\n";
  out << "seed=" << cfg.seed << "\n";
  return out.str();
}

uint64_t config_hash(const TrainConfig& cfg) {
  const std::string text = serialize_config(cfg);
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double lr_at(const TrainConfig& cfg, int epoch) {
  if (epoch < cfg.decay_start) return cfg.lr;
  if (epoch >= cfg.epochs) return 0.0;
  return cfg.lr * double(cfg.epochs - epoch) / double(cfg.epochs - cfg.decay_start);
}

}  // namespace mtsic

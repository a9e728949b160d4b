#pragma once

#include <cstdint>
#include <string>

#include "mtsic/objectives.hpp"

// Training configuration: file format is plain key=value text, one pair per
// line, '#' comments. Serialization is canonical (fixed key order, full
// precision), so hashing the serialized form identifies the configuration.

namespace mtsic {

struct TrainConfig {
  int epochs = 60;
  double lr = 1e-4;
  int decay_start = 30;  // lr holds before this epoch, then decays linearly to 0
  int batch = 1;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int crop = 256;
  int stride = 24;
  int stages_n = 3;
  int base = 8;
  int dim = 32;
  int head_width = 8;
  LossWeights<double> weights;
  uint64_t seed = 1;
};

// throws std::invalid_argument describing the first violated constraint
void validate_config(const TrainConfig& cfg);

// "key=value"; throws on unknown keys or malformed numbers
void apply_override(TrainConfig& cfg, const std::string& assignment);

// parse key=value text over the defaults
TrainConfig parse_config(const std::string& text);
TrainConfig load_config_file(const std::string& path);

// canonical text form: every key, fixed order, round-trip exact
std::string serialize_config(const TrainConfig& cfg);

// FNV-1a over the canonical serialization
uint64_t config_hash(const TrainConfig& cfg);

// lr(e) = lr for e < decay_start, then lr * (epochs - e) / (epochs - decay_start)
double lr_at(const TrainConfig& cfg, int epoch);

}  // namespace mtsic

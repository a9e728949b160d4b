#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtsic/layers.hpp"

// Checkpoint container shared by the generator and discriminator: magic
// "MTCK", version byte 1, little-endian u64 config hash, u32 tensor count,
// then per tensor: u32 name length + name bytes, u32 rank, rank u32 extents,
// and the values as little-endian 32-bit floats. Values are stored at 32-bit
// regardless of the training precision; buffers (running statistics) are
// included alongside trainable tensors.

namespace mtsic {

struct TensorRecord {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct CheckpointData {
  uint64_t config_hash = 0;
  std::vector<TensorRecord> tensors;
};

template <typename S>
void save_checkpoint(const std::string& path, const std::vector<const ParamSet<S>*>& sets,
                     uint64_t config_hash);

CheckpointData read_checkpoint(const std::string& path);

// copies matching records into the set by name; every set tensor must be
// present with the right shape, extra file records are ignored
template <typename S>
void load_into(const CheckpointData& ck, ParamSet<S>& ps);

// generator hyperparameters recovered from tensor names and shapes
struct ArchInfo {
  int bands = 0, base = 0, dim = 0, stages_n = 0, head_width = 0;
};

ArchInfo infer_arch(const CheckpointData& ck);

}  // namespace mtsic

#include "mtsic/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <stdexcept>

namespace mtsic {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'C', 'K'};
constexpr uint8_t kVersion = 1;

struct FileCloser {
  std::FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

void put_u32(std::FILE* f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  if (std::fwrite(b, 1, 4, f) != 4) throw std::runtime_error("checkpoint write failed");
}

void put_u64(std::FILE* f, uint64_t v) {
  put_u32(f, static_cast<uint32_t>(v & 0xffffffffull));
  put_u32(f, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::FILE* f) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw std::runtime_error("truncated checkpoint file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::FILE* f) {
  uint64_t lo = get_u32(f);
  uint64_t hi = get_u32(f);
  return lo | (hi << 32);
}

void put_f32(std::FILE* f, float v) { put_u32(f, std::bit_cast<uint32_t>(v)); }

float get_f32(std::FILE* f) { return std::bit_cast<float>(get_u32(f)); }

}  // namespace

template <typename S>
void save_checkpoint(const std::string& path, const std::vector<const ParamSet<S>*>& sets,
                     uint64_t config_hash) {
  FileCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  if (std::fwrite(kMagic, 1, 4, fc.f) != 4) throw std::runtime_error("checkpoint write failed");
  if (std::fputc(kVersion, fc.f) == EOF) throw std::runtime_error("checkpoint write failed");
  put_u64(fc.f, config_hash);
  size_t count = 0;
  for (const ParamSet<S>* ps : sets) count += ps->items.size();
  put_u32(fc.f, static_cast<uint32_t>(count));
  for (const ParamSet<S>* ps : sets) {
    for (const auto& item : ps->items) {
      put_u32(fc.f, static_cast<uint32_t>(item.name.size()));
      if (!item.name.empty() &&
          std::fwrite(item.name.data(), 1, item.name.size(), fc.f) != item.name.size())
        throw std::runtime_error("checkpoint write failed");
      put_u32(fc.f, static_cast<uint32_t>(item.t.rank()));
      for (int d = 0; d < item.t.rank(); ++d) put_u32(fc.f, static_cast<uint32_t>(item.t.dim(d)));
      const S* src = item.t.data();
      for (long long i = 0; i < item.t.size(); ++i) put_f32(fc.f, static_cast<float>(src[i]));
    }
  }
  if (std::fflush(fc.f) != 0) throw std::runtime_error("checkpoint write failed");
}

CheckpointData read_checkpoint(const std::string& path) {
  FileCloser fc{std::fopen(path.c_str(), "rb")};
  if (!fc.f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  if (std::fread(magic, 1, 4, fc.f) != 4 || magic[0] != 'M' || magic[1] != 'T' ||
      magic[2] != 'C' || magic[3] != 'K')
    throw std::runtime_error("not a checkpoint file: " + path);
  int ver = std::fgetc(fc.f);
  if (ver != kVersion) throw std::runtime_error("unsupported checkpoint version");
  CheckpointData ck;
  ck.config_hash = get_u64(fc.f);
  uint32_t count = get_u32(fc.f);
  ck.tensors.reserve(count);
  for (uint32_t k = 0; k < count; ++k) {
    TensorRecord rec;
    uint32_t name_len = get_u32(fc.f);
    rec.name.resize(name_len);
    if (name_len && std::fread(rec.name.data(), 1, name_len, fc.f) != name_len)
      throw std::runtime_error("truncated checkpoint file");
    uint32_t rank = get_u32(fc.f);
    if (rank > 8) throw std::runtime_error("corrupt checkpoint: implausible rank");
    long long numel = 1;
    rec.shape.resize(rank);
    for (uint32_t d = 0; d < rank; ++d) {
      rec.shape[d] = static_cast<int>(get_u32(fc.f));
      if (rec.shape[d] <= 0) throw std::runtime_error("corrupt checkpoint: bad extent");
      numel *= rec.shape[d];
    }
    rec.data.resize(static_cast<size_t>(numel));
    for (long long i = 0; i < numel; ++i) rec.data[static_cast<size_t>(i)] = get_f32(fc.f);
    ck.tensors.push_back(std::move(rec));
  }
  return ck;
}

template <typename S>
void load_into(const CheckpointData& ck, ParamSet<S>& ps) {
  for (auto& item : ps.items) {
    const TensorRecord* rec = nullptr;
    for (const auto& r : ck.tensors) {
      if (r.name == item.name) {
        rec = &r;
        break;
      }
    }
    if (!rec) throw std::runtime_error("checkpoint is missing tensor " + item.name);
    if (rec->shape != item.t.shape())
      throw std::runtime_error("checkpoint shape mismatch for " + item.name);
    S* dst = item.t.data();
    for (size_t i = 0; i < rec->data.size(); ++i) dst[i] = static_cast<S>(rec->data[i]);
  }
}

ArchInfo infer_arch(const CheckpointData& ck) {
  ArchInfo a;
  const TensorRecord* stem = nullptr;
  const TensorRecord* fuse = nullptr;
  const TensorRecord* sigma = nullptr;
  int max_stage = -1;
  for (const auto& r : ck.tensors) {
    if (r.name == "backbone.stem.conv.w") stem = &r;
    if (r.name == "backbone.fuse.w") fuse = &r;
    if (r.name == "stage0.enc0a.smsa.sigma") sigma = &r;
    if (r.name.rfind("stage", 0) == 0) {
      size_t dot = r.name.find('.');
      if (dot != std::string::npos && dot > 5) {
        int k = std::stoi(r.name.substr(5, dot - 5));
        if (k > max_stage) max_stage = k;
      }
    }
  }
  if (!stem || !fuse || !sigma || max_stage < 0)
    throw std::runtime_error("checkpoint does not contain a recognizable generator");
  if (stem->shape.size() != 4 || fuse->shape.size() != 4 || sigma->shape.size() != 1)
    throw std::runtime_error("checkpoint does not contain a recognizable generator");
  a.base = stem->shape[0];
  a.bands = stem->shape[1];
  a.dim = fuse->shape[0];
  a.stages_n = max_stage + 1;
  if (sigma->shape[0] <= 0 || a.dim % sigma->shape[0] != 0)
    throw std::runtime_error("checkpoint does not contain a recognizable generator");
  a.head_width = a.dim / sigma->shape[0];
  return a;
}

template void save_checkpoint<float>(const std::string&, const std::vector<const ParamSet<float>*>&,
                                     uint64_t);
template void save_checkpoint<double>(const std::string&,
                                       const std::vector<const ParamSet<double>*>&, uint64_t);
template void load_into<float>(const CheckpointData&, ParamSet<float>&);
template void load_into<double>(const CheckpointData&, ParamSet<double>&);

}  // namespace mtsic

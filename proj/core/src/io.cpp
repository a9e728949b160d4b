#include "mtsic/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mtsic {
namespace {

void put_u32(std::ostream& o, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  o.write(b, 4);
}

uint32_t get_u32(std::istream& i, const std::string& path) {
  unsigned char b[4];
  i.read(reinterpret_cast<char*>(b), 4);
  if (!i) throw std::runtime_error("truncated cube file: " + path);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

struct FileCloser {
  FILE* fp;
  ~FileCloser() {
    if (fp) std::fclose(fp);
  }
};

}  // namespace

void write_cube(const std::string& path, const Tensor<float>& cube) {
  if (!cube.defined() || cube.rank() != 3)
    throw std::invalid_argument("write_cube: expected a rank-3 cube");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write("SICB", 4);
  out.put(char(1));
  put_u32(out, uint32_t(cube.dim(0)));
  put_u32(out, uint32_t(cube.dim(1)));
  put_u32(out, uint32_t(cube.dim(2)));
  const float* d = cube.data();
  for (int64_t i = 0; i < cube.size(); ++i) put_u32(out, std::bit_cast<uint32_t>(d[i]));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Tensor<float> read_cube(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SICB")
    throw std::runtime_error("not a spectral cube (bad magic): " + path);
  int version = in.get();
  if (version != 1)
    throw std::runtime_error("unsupported cube version " + std::to_string(version) + ": " + path);
  int l = int(get_u32(in, path));
  int h = int(get_u32(in, path));
  int w = int(get_u32(in, path));
  if (l < 1 || h < 1 || w < 1) throw std::runtime_error("bad cube header: " + path);
  Tensor<float> cube({l, h, w});
  float* d = cube.data();
  for (int64_t i = 0; i < cube.size(); ++i) d[i] = std::bit_cast<float>(get_u32(in, path));
  in.peek();
  if (!in.eof()) throw std::runtime_error("trailing bytes after cube payload: " + path);
  return cube;
}

void write_png_rgb(const std::string& path, const Tensor<float>& rgb) {
  if (!rgb.defined() || rgb.rank() != 3 || rgb.dim(0) != 3)
    throw std::invalid_argument("write_png_rgb: expected a {3,H,W} image");
  const int h = rgb.dim(1), w = rgb.dim(2);
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  FileCloser closer{fp};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png allocation failed");
  }
  std::vector<unsigned char> row(size_t(w) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const float* d = rgb.data();
  const int64_t hw = int64_t(h) * w;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int c = 0; c < 3; ++c) {
        float v = d[c * hw + int64_t(i) * w + j];
        v = std::min(1.0f, std::max(0.0f, v));
        row[size_t(j) * 3 + c] = (unsigned char)std::lround(v * 255.0f);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<float> read_png_rgb(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open: " + path);
  FileCloser closer{fp};
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8))
    throw std::runtime_error("not a png file: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png allocation failed");
  }
  Tensor<float> out;
  std::vector<unsigned char> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int w = int(png_get_image_width(png, info));
  const int h = int(png_get_image_height(png, info));
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported png layout: " + path);
  }
  out = Tensor<float>({3, h, w});
  row.resize(size_t(w) * 3);
  float* d = out.data();
  const int64_t hw = int64_t(h) * w;
  for (int i = 0; i < h; ++i) {
    png_read_row(png, row.data(), nullptr);
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < 3; ++c)
        d[c * hw + int64_t(i) * w + j] = float(row[size_t(j) * 3 + c]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

std::vector<std::pair<std::string, std::string>> list_scene_pairs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".cube") continue;
    fs::path png = entry.path();
    png.replace_extension(".png");
    if (!fs::exists(png))
      throw std::runtime_error("cube without matching png: " + entry.path().string());
    pairs.emplace_back(entry.path().string(), png.string());
  }
  std::sort(pairs.begin(), pairs.end());
  if (pairs.empty()) throw std::runtime_error("no scene pairs in " + dir);
  return pairs;
}

}  // namespace mtsic

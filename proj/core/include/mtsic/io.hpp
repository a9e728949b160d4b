#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mtsic/tensor.hpp"

// File IO for the two on-disk data types: spectral cubes in a small
// self-describing binary container, and 8-bit RGB PNG images.

namespace mtsic {

// Cube container: magic "SICB", version byte 1, little-endian u32 L, H, W,
// then L*H*W little-endian 32-bit floats, band-major then row-major.
// Round trips are bit-exact.
void write_cube(const std::string& path, const Tensor<float>& cube);
Tensor<float> read_cube(const std::string& path);

// {3,H,W} in [0,1] <-> 8-bit RGB; write clamps, read scales by 1/255
void write_png_rgb(const std::string& path, const Tensor<float>& rgb);
Tensor<float> read_png_rgb(const std::string& path);

// (cube path, png path) pairs in a data directory: every *.cube file sorted
// by name, each with its same-stem .png next to it
std::vector<std::pair<std::string, std::string>> list_scene_pairs(const std::string& dir);

}  // namespace mtsic

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cyclegan/tensor.hpp"

namespace cyclegan {

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  std::uint8_t& at(int row, int col, int channel) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
  std::uint8_t at(int row, int col, int channel) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
};

// Decodes any PNG libpng understands (palette, gray, 16-bit, alpha) into
// 8-bit RGB. Throws IoError on unreadable or malformed files.
RgbImage read_png(const std::filesystem::path& path);

// Writes through a temporary file and renames it into place.
void write_png(const std::filesystem::path& path, const RgbImage& image);

// Bilinear resampling (pixel-center aligned).
RgbImage resize_bilinear(const RgbImage& image, int width, int height);

// byte b -> b / 127.5 - 1, producing a 1 x 3 x H x W tensor in [-1, 1].
Tensor<float> image_to_tensor(const RgbImage& image);

// Inverse of image_to_tensor, rounding to the nearest byte and clamping.
// Accepts 1 x 3 x H x W or 3 x H x W.
RgbImage tensor_to_image(const Tensor<float>& tensor);

inline float byte_to_unit(std::uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }
std::uint8_t unit_to_byte(float v);

}  // namespace cyclegan

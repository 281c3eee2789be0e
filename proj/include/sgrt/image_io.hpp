#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sgrt/tensor.hpp"

namespace sgrt {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bytes;
};

/// Reads any PNG and converts it to 8-bit RGB (alpha dropped, gray expanded).
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// v / 255 per channel.
Tensor to_tensor(const RgbImage& image);
/// Rounds clamp(v, 0, 1) * 255. Requires 3 channels.
RgbImage to_rgb(const Tensor& image);

Tensor read_png_tensor(const std::filesystem::path& path);
void write_png_tensor(const std::filesystem::path& path, const Tensor& image);

}  // namespace sgrt

#include "sgrt/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

namespace sgrt {

RgbImage read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.height = static_cast<int>(png.height);
  out.width = static_cast<int>(png.width);
  out.bytes.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, out.bytes.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.bytes.size() != static_cast<std::size_t>(image.height) * image.width * 3)
    throw PreconditionError("RGB buffer size does not match " + std::to_string(image.height) + "x" +
                            std::to_string(image.width));
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.bytes.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
}

Tensor to_tensor(const RgbImage& image) {
  Tensor t({image.height, image.width, 3});
  for (std::size_t i = 0; i < image.bytes.size(); ++i) t[i] = image.bytes[i] / 255.0f;
  return t;
}

RgbImage to_rgb(const Tensor& image) {
  if (image.channels() != 3) throw ShapeError("expected a 3-channel image, got " + image.shape().str());
  RgbImage out{image.height(), image.width(), std::vector<std::uint8_t>(image.size())};
  for (std::size_t i = 0; i < image.size(); ++i)
    out.bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

Tensor read_png_tensor(const std::filesystem::path& path) { return to_tensor(read_png(path)); }

void write_png_tensor(const std::filesystem::path& path, const Tensor& image) { write_png(path, to_rgb(image)); }

}  // namespace sgrt

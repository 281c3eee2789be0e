#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sgrt/tensor.hpp"

namespace sgrt {

/// Class indices of the label mask. Index 0 is background; 1..5 map to the
/// five network output channels in order.
enum class SegClass : std::uint8_t { kBackground = 0, kField = 1, kLine = 2, kRobot = 3, kBall = 4, kGoalPost = 5 };

inline constexpr int kMaskClassCount = 6;

struct PaletteEntry {
  SegClass cls;
  std::string_view name;
  std::array<std::uint8_t, 3> rgb;
};

inline constexpr std::array<PaletteEntry, kMaskClassCount> kPalette = {{
    {SegClass::kBackground, "background", {0, 0, 0}},
    {SegClass::kField, "field", {0, 255, 0}},
    {SegClass::kLine, "line", {255, 255, 255}},
    {SegClass::kRobot, "robot", {255, 0, 255}},
    {SegClass::kBall, "ball", {255, 0, 0}},
    {SegClass::kGoalPost, "goal_post", {0, 0, 255}},
}};

/// Per-pixel class indices, row-major.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  /// Pixel count per class index.
  std::array<std::size_t, kMaskClassCount> histogram() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

struct SegmentationSample {
  Tensor image;  // h x w x 3, values in [0, 1]
  Mask mask;

  /// Throws unless image is h x w x 3 matching the mask and all labels are < 6.
  void validate() const;
};

}  // namespace sgrt

#pragma once

#include <cstdint>
#include <vector>

namespace sgrt {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Simple or self-intersecting polygon with 3 to 6 vertices in pixel
/// coordinates. Vertices may lie outside the frame.
struct Polygon {
  std::vector<Point> vertices;

  void validate() const;
};

/// Even-odd scanline fill. Pixel (y, x) is covered when its center
/// (x + 0.5, y + 0.5) lies inside. Returns a height x width coverage map.
std::vector<std::uint8_t> rasterize_polygon(const Polygon& polygon, int height, int width);

}  // namespace sgrt

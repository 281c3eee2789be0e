#pragma once

#include <cstdint>
#include <vector>

#include "sgrt/polygon.hpp"

namespace sgrt::oracle {

// Crossing-number test, one pixel center at a time.
inline bool point_in_polygon(const Polygon& poly, double px, double py) {
  bool inside = false;
  const auto& v = poly.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > py) != (v[j].y > py)) {
      const double x_cross = v[i].x + (py - v[i].y) * (v[j].x - v[i].x) / (v[j].y - v[i].y);
      if (px < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline std::vector<std::uint8_t> brute_force_coverage(const Polygon& poly, int height, int width) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(height) * width, 0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out[static_cast<std::size_t>(y) * width + x] = point_in_polygon(poly, x + 0.5, y + 0.5) ? 1 : 0;
  return out;
}

}  // namespace sgrt::oracle

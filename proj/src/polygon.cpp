#include "sgrt/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgrt/errors.hpp"

namespace sgrt {

void Polygon::validate() const {
  if (vertices.size() < 3 || vertices.size() > 6)
    throw PreconditionError("polygon needs 3 to 6 vertices, got " + std::to_string(vertices.size()));
}

std::vector<std::uint8_t> rasterize_polygon(const Polygon& polygon, int height, int width) {
  polygon.validate();
  if (height < 1 || width < 1) throw PreconditionError("raster size must be positive");
  std::vector<std::uint8_t> cover(static_cast<std::size_t>(height) * width, 0);
  const auto& v = polygon.vertices;
  const std::size_t n = v.size();
  std::vector<double> xs;
  xs.reserve(n);
  for (int y = 0; y < height; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = v[i];
      const Point& b = v[j];
      // Half-open in y so a vertex on the scanline is counted once.
      if ((a.y > yc) != (b.y > yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    std::uint8_t* row = cover.data() + static_cast<std::size_t>(y) * width;
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Centers x + 0.5 with xs[k] < x + 0.5 < xs[k+1].
      const double lo = std::floor(xs[k] - 0.5) + 1.0;
      const double hi = std::ceil(xs[k + 1] - 0.5) - 1.0;
      const int x0 = static_cast<int>(std::clamp(lo, 0.0, static_cast<double>(width)));
      const int x1 = static_cast<int>(std::clamp(hi, -1.0, static_cast<double>(width - 1)));
      for (int x = x0; x <= x1; ++x) row[x] = 1;
    }
  }
  return cover;
}

}  // namespace sgrt

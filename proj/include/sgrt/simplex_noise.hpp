#pragma once

#include <array>
#include <cstdint>

namespace sgrt {

/// Seeded 2-D simplex noise. Values lie in [-1, 1]; the field is continuous
/// with zero mean over large areas.
class SimplexNoise2D {
 public:
  explicit SimplexNoise2D(std::uint64_t seed);

  double operator()(double x, double y) const;

 private:
  std::array<std::uint8_t, 512> perm_{};
};

}  // namespace sgrt

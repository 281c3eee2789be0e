#include "sgrt/simplex_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sgrt/random.hpp"

namespace sgrt {
namespace {

constexpr double kSkew = 0.36602540378443864676;    // (sqrt(3) - 1) / 2
constexpr double kUnskew = 0.21132486540518711775;  // (3 - sqrt(3)) / 6

// Twelve gradient directions on the unit square edges and diagonals.
constexpr double kGrad[12][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}, {1, 0}, {-1, 0},
                                 {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}};

double corner(int gi, double x, double y) {
  double t = 0.5 - x * x - y * y;
  if (t < 0.0) return 0.0;
  t *= t;
  return t * t * (kGrad[gi][0] * x + kGrad[gi][1] * y);
}

}  // namespace

SimplexNoise2D::SimplexNoise2D(std::uint64_t seed) {
  std::array<std::uint8_t, 256> p{};
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (int i = 255; i > 0; --i) std::swap(p[i], p[rng.uniform_int(0, i)]);
  for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
}

double SimplexNoise2D::operator()(double xin, double yin) const {
  const double s = (xin + yin) * kSkew;
  const int i = static_cast<int>(std::floor(xin + s));
  const int j = static_cast<int>(std::floor(yin + s));
  const double t = (i + j) * kUnskew;
  const double x0 = xin - (i - t);
  const double y0 = yin - (j - t);

  const int i1 = x0 > y0 ? 1 : 0;
  const int j1 = 1 - i1;
  const double x1 = x0 - i1 + kUnskew;
  const double y1 = y0 - j1 + kUnskew;
  const double x2 = x0 - 1.0 + 2.0 * kUnskew;
  const double y2 = y0 - 1.0 + 2.0 * kUnskew;

  const int ii = i & 255;
  const int jj = j & 255;
  const int g0 = perm_[ii + perm_[jj]] % 12;
  const int g1 = perm_[ii + i1 + perm_[jj + j1]] % 12;
  const int g2 = perm_[ii + 1 + perm_[jj + 1]] % 12;

  const double n = 70.0 * (corner(g0, x0, y0) + corner(g1, x1, y1) + corner(g2, x2, y2));
  return std::clamp(n, -1.0, 1.0);
}

}  // namespace sgrt

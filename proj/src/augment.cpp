#include "sgrt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sgrt/simplex_noise.hpp"

namespace sgrt {
namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <typename F>
SegmentationSample map_image(const SegmentationSample& sample, F&& f) {
  sample.validate();
  SegmentationSample out = sample;
  for (auto& v : out.image.values()) v = clamp01(f(static_cast<double>(v)));
  return out;
}

template <typename F>
SegmentationSample map_pixels(const SegmentationSample& sample, F&& f) {
  sample.validate();
  SegmentationSample out = sample;
  const std::size_t n = out.image.shape().pixels();
  float* p = out.image.data();
  for (std::size_t i = 0; i < n; ++i, p += 3) {
    const auto rgb = f(std::array<double, 3>{p[0], p[1], p[2]});
    for (int c = 0; c < 3; ++c) p[c] = clamp01(rgb[c]);
  }
  return out;
}

// Reflection without repeating the edge pixel: -1 -> 1, n -> n - 2.
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void check_probability(double p, std::string_view name) {
  require(p >= 0.0 && p <= 1.0, std::string(name) + ".probability must be in [0, 1]");
}

void check_range(const Range& r, std::string_view name, double min, double max) {
  require(std::isfinite(r.low) && std::isfinite(r.high) && r.low <= r.high,
          std::string(name) + " range must satisfy low <= high");
  require(r.low >= min && r.high <= max, std::string(name) + " range must lie within [" + std::to_string(min) +
                                             ", " + std::to_string(max) + "]");
}

}  // namespace

AugmentationConfig AugmentationConfig::none() {
  AugmentationConfig c;
  c.flip.enabled = false;
  c.gaussian_noise.enabled = false;
  c.multiply.enabled = false;
  c.add_rgb.enabled = false;
  c.add_hsv.enabled = false;
  c.simplex.enabled = false;
  c.motion_blur.enabled = false;
  c.contrast.enabled = false;
  c.sun_patches.enabled = false;
  return c;
}

AugmentationConfig AugmentationConfig::photometric_only() {
  AugmentationConfig c;
  c.flip.enabled = false;
  c.gaussian_noise.probability = 1.0;
  c.multiply.probability = 1.0;
  c.add_rgb.probability = 1.0;
  c.add_hsv.probability = 1.0;
  c.simplex.probability = 1.0;
  c.motion_blur.probability = 1.0;
  c.contrast.probability = 1.0;
  c.sun_patches.probability = 1.0;
  return c;
}

void AugmentationConfig::validate() const {
  const double inf = std::numeric_limits<double>::infinity();
  check_probability(flip.probability, "flip");
  check_probability(gaussian_noise.probability, "gaussian_noise");
  check_range(gaussian_noise.sigma, "gaussian_noise.sigma", 0.0, inf);
  check_probability(multiply.probability, "multiply");
  check_range(multiply.factor, "multiply.factor", 0.0, inf);
  check_probability(add_rgb.probability, "add_rgb");
  check_range(add_rgb.delta, "add_rgb.delta", -1.0, 1.0);
  check_probability(add_hsv.probability, "add_hsv");
  check_range(add_hsv.hue, "add_hsv.hue", -1.0, 1.0);
  check_range(add_hsv.saturation, "add_hsv.saturation", -1.0, 1.0);
  check_range(add_hsv.value, "add_hsv.value", -1.0, 1.0);
  check_probability(simplex.probability, "simplex");
  check_range(simplex.amplitude, "simplex.amplitude", 0.0, inf);
  check_range(simplex.scale, "simplex.scale", 0.0, inf);
  require(simplex.scale.low > 0.0, "simplex.scale must be positive");
  check_probability(motion_blur.probability, "motion_blur");
  require(!motion_blur.lengths.empty(), "motion_blur.lengths must not be empty");
  for (int l : motion_blur.lengths) require(l >= 1 && l % 2 == 1, "motion_blur.lengths must be odd and >= 1");
  check_range(motion_blur.angle, "motion_blur.angle", -inf, inf);
  check_probability(contrast.probability, "contrast");
  check_range(contrast.alpha, "contrast.alpha", 0.0, inf);
  check_probability(sun_patches.probability, "sun_patches");
  require(sun_patches.count.low >= 0 && sun_patches.count.low <= sun_patches.count.high,
          "sun_patches.count range must satisfy 0 <= low <= high");
  check_range(sun_patches.factor, "sun_patches.factor", 0.0, inf);
}

// --- background ------------------------------------------------------------------

Tensor fit_background(const Tensor& background, int height, int width) {
  if (background.channels() != 3)
    throw ShapeError("background must have 3 channels, got " + background.shape().str());
  if (background.height() == height && background.width() == width) return background;
  const int bh = background.height();
  const int bw = background.width();
  const double scale = std::max(static_cast<double>(height) / bh, static_cast<double>(width) / bw);
  const double off_y = (bh * scale - height) / 2.0;
  const double off_x = (bw * scale - width) / 2.0;
  Tensor out({height, width, 3});
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5 + off_y) / scale - 0.5, 0.0, bh - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, bh - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5 + off_x) / scale - 0.5, 0.0, bw - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, bw - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = background.at(y0, x0, c) * (1 - fx) + background.at(y0, x1, c) * fx;
        const double bottom = background.at(y1, x0, c) * (1 - fx) + background.at(y1, x1, c) * fx;
        out.at(y, x, c) = static_cast<float>(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

SegmentationSample replace_background(const SegmentationSample& sample, const Tensor& background) {
  sample.validate();
  const Tensor fitted = fit_background(background, sample.mask.height, sample.mask.width);
  assert_shape(fitted, sample.image.shape());
  SegmentationSample out = sample;
  for (int y = 0; y < sample.mask.height; ++y)
    for (int x = 0; x < sample.mask.width; ++x)
      if (sample.mask.at(y, x) == static_cast<std::uint8_t>(SegClass::kBackground))
        std::copy_n(fitted.pixel(y, x), 3, out.image.pixel(y, x));
  return out;
}

// --- geometric -------------------------------------------------------------------

SegmentationSample flip_mirror(const SegmentationSample& sample) {
  sample.validate();
  SegmentationSample out = sample;
  const int w = sample.mask.width;
  for (int y = 0; y < sample.mask.height; ++y)
    for (int x = 0; x < w; ++x) {
      std::copy_n(sample.image.pixel(y, w - 1 - x), 3, out.image.pixel(y, x));
      out.mask.at(y, x) = sample.mask.at(y, w - 1 - x);
    }
  return out;
}

// --- photometric -----------------------------------------------------------------

SegmentationSample gaussian_noise(const SegmentationSample& sample, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), "gaussian_noise sigma must be >= 0");
  if (sigma == 0.0) return map_image(sample, [](double v) { return v; });
  Rng rng(seed);
  return map_image(sample, [&](double v) { return v + sigma * rng.normal(); });
}

SegmentationSample multiply_brightness(const SegmentationSample& sample, double m) {
  require(m >= 0.0 && std::isfinite(m), "multiply factor must be >= 0");
  return map_image(sample, [m](double v) { return v * m; });
}

SegmentationSample add_rgb(const SegmentationSample& sample, std::array<double, 3> delta) {
  for (double d : delta) require(d >= -1.0 && d <= 1.0, "add_rgb delta must be in [-1, 1]");
  return map_pixels(sample, [&](std::array<double, 3> p) {
    for (int c = 0; c < 3; ++c) p[c] += delta[c];
    return p;
  });
}

std::array<double, 3> rgb_to_hsv(std::array<double, 3> rgb) {
  const auto [r, g, b] = rgb;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r)
      h = (g - b) / d;
    else if (mx == g)
      h = 2.0 + (b - r) / d;
    else
      h = 4.0 + (r - g) / d;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? d / mx : 0.0;
  return {h, s, mx};
}

std::array<double, 3> hsv_to_rgb(std::array<double, 3> hsv) {
  const auto [h, s, v] = hsv;
  const double h6 = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

SegmentationSample add_hsv(const SegmentationSample& sample, double dh, double ds, double dv) {
  require(std::abs(dh) <= 1.0 && std::abs(ds) <= 1.0 && std::abs(dv) <= 1.0, "add_hsv deltas must be in [-1, 1]");
  return map_pixels(sample, [&](std::array<double, 3> p) {
    auto hsv = rgb_to_hsv(p);
    hsv[0] = hsv[0] + dh;
    hsv[0] -= std::floor(hsv[0]);
    hsv[1] = std::clamp(hsv[1] + ds, 0.0, 1.0);
    hsv[2] = std::clamp(hsv[2] + dv, 0.0, 1.0);
    return hsv_to_rgb(hsv);
  });
}

SegmentationSample contrast_normalize(const SegmentationSample& sample, double alpha) {
  require(alpha >= 0.0 && std::isfinite(alpha), "contrast alpha must be >= 0");
  return map_image(sample, [alpha](double v) { return 0.5 + alpha * (v - 0.5); });
}

std::vector<double> motion_blur_kernel(int length, double angle_degrees) {
  require(length >= 1 && length % 2 == 1, "motion blur length must be odd and >= 1");
  const int r = length / 2;
  std::vector<double> k(static_cast<std::size_t>(length) * length, 0.0);
  const double a = angle_degrees * std::numbers::pi / 180.0;
  const double dx = std::cos(a);
  const double dy = -std::sin(a);
  // Equal weight on every cell a supersampled ray through the center crosses.
  const int steps = 4 * length;
  for (int s = 0; s <= steps; ++s) {
    const double t = -r + 2.0 * r * s / steps;
    const int kx = std::clamp(static_cast<int>(std::lround(t * dx)), -r, r) + r;
    const int ky = std::clamp(static_cast<int>(std::lround(t * dy)), -r, r) + r;
    k[static_cast<std::size_t>(ky) * length + kx] = 1.0;
  }
  double sum = 0.0;
  for (double v : k) sum += v;
  for (double& v : k) v /= sum;
  return k;
}

SegmentationSample motion_blur(const SegmentationSample& sample, int length, double angle_degrees) {
  const auto kernel = motion_blur_kernel(length, angle_degrees);
  sample.validate();
  SegmentationSample out = sample;
  if (length == 1) return out;
  const int h = sample.mask.height;
  const int w = sample.mask.width;
  const int r = length / 2;
  struct Tap {
    int dy, dx;
    double weight;
  };
  std::vector<Tap> taps;
  for (int ky = 0; ky < length; ++ky)
    for (int kx = 0; kx < length; ++kx)
      if (const double wgt = kernel[static_cast<std::size_t>(ky) * length + kx]; wgt > 0.0)
        taps.push_back({ky - r, kx - r, wgt});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (const Tap& t : taps) {
        const float* p = sample.image.pixel(reflect(y + t.dy, h), reflect(x + t.dx, w));
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * p[c];
      }
      float* o = out.image.pixel(y, x);
      for (int c = 0; c < 3; ++c) o[c] = clamp01(acc[c]);
    }
  return out;
}

SegmentationSample simplex_overlay(const SegmentationSample& sample, double amplitude, double scale,
                                   std::uint64_t seed) {
  require(amplitude >= 0.0 && std::isfinite(amplitude), "simplex amplitude must be >= 0");
  require(scale > 0.0 && std::isfinite(scale), "simplex scale must be > 0");
  sample.validate();
  SegmentationSample out = sample;
  const SimplexNoise2D noise(seed);
  for (int y = 0; y < sample.mask.height; ++y)
    for (int x = 0; x < sample.mask.width; ++x) {
      const double n = amplitude * noise(x * scale, y * scale);
      float* p = out.image.pixel(y, x);
      for (int c = 0; c < 3; ++c) p[c] = clamp01(p[c] + n);
    }
  return out;
}

// --- sun patches -----------------------------------------------------------------

SegmentationSample apply_sun_patches(const SegmentationSample& sample, const std::vector<SunPatch>& patches) {
  sample.validate();
  const int h = sample.mask.height;
  const int w = sample.mask.width;
  std::vector<double> gain(static_cast<std::size_t>(h) * w, 1.0);
  for (const auto& patch : patches) {
    require(patch.factor >= 0.0 && std::isfinite(patch.factor), "sun patch factor must be >= 0");
    const auto cover = rasterize_polygon(patch.polygon, h, w);
    for (std::size_t i = 0; i < cover.size(); ++i)
      if (cover[i]) gain[i] *= patch.factor;
  }
  SegmentationSample out = sample;
  float* p = out.image.data();
  for (std::size_t i = 0; i < gain.size(); ++i, p += 3)
    if (gain[i] != 1.0)
      for (int c = 0; c < 3; ++c) p[c] = clamp01(p[c] * gain[i]);
  return out;
}

std::vector<SunPatch> draw_sun_patches(const SunPatchConfig& config, int height, int width, Rng& rng) {
  std::vector<SunPatch> patches(static_cast<std::size_t>(config.count.draw(rng)));
  for (auto& patch : patches) {
    const int n = rng.uniform_int(3, 6);
    for (int i = 0; i < n; ++i) patch.polygon.vertices.push_back({rng.uniform(0.0, width), rng.uniform(0.0, height)});
    patch.factor = config.factor.draw(rng);
  }
  return patches;
}

SegmentationSample sun_patches(const SegmentationSample& sample, const SunPatchConfig& config, Rng& rng) {
  return apply_sun_patches(sample, draw_sun_patches(config, sample.mask.height, sample.mask.width, rng));
}

// --- pipeline --------------------------------------------------------------------

SegmentationSample apply_pipeline(const SegmentationSample& sample, const AugmentationConfig& config,
                                  std::uint64_t sample_index) {
  config.validate();
  sample.validate();
  Rng rng(derive_seed(config.master_seed, sample_index));
  SegmentationSample s = sample;
  auto fires = [&rng](bool enabled, double p) { return enabled && rng.bernoulli(p); };

  if (fires(config.flip.enabled, config.flip.probability)) s = flip_mirror(s);
  if (fires(config.gaussian_noise.enabled, config.gaussian_noise.probability)) {
    const double sigma = config.gaussian_noise.sigma.draw(rng);
    s = gaussian_noise(s, sigma, rng.next());
  }
  if (fires(config.multiply.enabled, config.multiply.probability))
    s = multiply_brightness(s, config.multiply.factor.draw(rng));
  if (fires(config.add_rgb.enabled, config.add_rgb.probability)) {
    std::array<double, 3> d{};
    for (auto& v : d) v = config.add_rgb.delta.draw(rng);
    s = add_rgb(s, d);
  }
  if (fires(config.add_hsv.enabled, config.add_hsv.probability)) {
    const double dh = config.add_hsv.hue.draw(rng);
    const double ds = config.add_hsv.saturation.draw(rng);
    const double dv = config.add_hsv.value.draw(rng);
    s = add_hsv(s, dh, ds, dv);
  }
  if (fires(config.simplex.enabled, config.simplex.probability)) {
    const double amplitude = config.simplex.amplitude.draw(rng);
    const double scale = config.simplex.scale.draw(rng);
    s = simplex_overlay(s, amplitude, scale, rng.next());
  }
  if (fires(config.motion_blur.enabled, config.motion_blur.probability)) {
    const auto& lengths = config.motion_blur.lengths;
    const int length = lengths[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(lengths.size()) - 1))];
    s = motion_blur(s, length, config.motion_blur.angle.draw(rng));
  }
  if (fires(config.contrast.enabled, config.contrast.probability))
    s = contrast_normalize(s, config.contrast.alpha.draw(rng));
  if (fires(config.sun_patches.enabled, config.sun_patches.probability)) s = sun_patches(s, config.sun_patches, rng);
  return s;
}

}  // namespace sgrt

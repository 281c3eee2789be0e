#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sgrt/polygon.hpp"
#include "sgrt/random.hpp"
#include "sgrt/sample.hpp"

namespace sgrt {

struct Range {
  double low = 0.0;
  double high = 0.0;

  double draw(Rng& rng) const { return rng.uniform(low, high); }
  friend bool operator==(const Range&, const Range&) = default;
};

struct IntRange {
  int low = 0;
  int high = 0;

  int draw(Rng& rng) const { return rng.uniform_int(low, high); }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct FlipConfig {
  bool enabled = true;
  double probability = 0.5;
  friend bool operator==(const FlipConfig&, const FlipConfig&) = default;
};

struct GaussianNoiseConfig {
  bool enabled = true;
  double probability = 0.5;
  Range sigma{0.0, 0.05};
  friend bool operator==(const GaussianNoiseConfig&, const GaussianNoiseConfig&) = default;
};

struct MultiplyConfig {
  bool enabled = true;
  double probability = 0.5;
  Range factor{0.7, 1.3};
  friend bool operator==(const MultiplyConfig&, const MultiplyConfig&) = default;
};

struct AddRgbConfig {
  bool enabled = true;
  double probability = 0.3;
  Range delta{-0.1, 0.1};  // drawn independently per channel
  friend bool operator==(const AddRgbConfig&, const AddRgbConfig&) = default;
};

struct AddHsvConfig {
  bool enabled = true;
  double probability = 0.3;
  Range hue{-0.05, 0.05};
  Range saturation{-0.2, 0.2};
  Range value{-0.2, 0.2};
  friend bool operator==(const AddHsvConfig&, const AddHsvConfig&) = default;
};

struct SimplexConfig {
  bool enabled = true;
  double probability = 0.3;
  Range amplitude{0.0, 0.15};
  Range scale{0.02, 0.1};  // noise frequency per pixel
  friend bool operator==(const SimplexConfig&, const SimplexConfig&) = default;
};

struct MotionBlurConfig {
  bool enabled = true;
  double probability = 0.2;
  std::vector<int> lengths{3, 5, 7, 9};
  Range angle{0.0, 180.0};  // degrees
  friend bool operator==(const MotionBlurConfig&, const MotionBlurConfig&) = default;
};

struct ContrastConfig {
  bool enabled = true;
  double probability = 0.3;
  Range alpha{0.5, 1.5};
  friend bool operator==(const ContrastConfig&, const ContrastConfig&) = default;
};

struct SunPatchConfig {
  bool enabled = true;
  double probability = 0.3;
  IntRange count{1, 4};
  Range factor{1.1, 1.8};
  friend bool operator==(const SunPatchConfig&, const SunPatchConfig&) = default;
};

/// Order in which apply_pipeline visits the augmentations. Not configurable.
inline constexpr std::array<std::string_view, 9> kAugmentationOrder = {
    "flip",    "gaussian_noise", "multiply", "add_rgb",    "add_hsv",
    "simplex", "motion_blur",    "contrast", "sun_patches"};

struct AugmentationConfig {
  std::uint64_t master_seed = 0;
  FlipConfig flip;
  GaussianNoiseConfig gaussian_noise;
  MultiplyConfig multiply;
  AddRgbConfig add_rgb;
  AddHsvConfig add_hsv;
  SimplexConfig simplex;
  MotionBlurConfig motion_blur;
  ContrastConfig contrast;
  SunPatchConfig sun_patches;

  /// Every augmentation disabled.
  static AugmentationConfig none();
  /// Only the ops that leave the mask untouched enabled, each with probability 1.
  static AugmentationConfig photometric_only();

  /// ConfigError on probabilities outside [0, 1], empty or inverted ranges,
  /// or parameters outside what the ops accept.
  void validate() const;

  friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

AugmentationConfig augmentation_config_from_json(std::string_view text);
std::string augmentation_config_to_json(const AugmentationConfig& config);

// --- individual operations -------------------------------------------------------

/// Background pixels of the mask take the background image's pixel. A
/// background of different size is scaled (aspect-preserving, bilinear) to
/// cover the frame and center-cropped.
SegmentationSample replace_background(const SegmentationSample& sample, const Tensor& background);
/// Scale-and-crop used by replace_background.
Tensor fit_background(const Tensor& background, int height, int width);

/// Mirror about the vertical axis (left-right swap), image and mask together.
SegmentationSample flip_mirror(const SegmentationSample& sample);

SegmentationSample gaussian_noise(const SegmentationSample& sample, double sigma, std::uint64_t seed);
SegmentationSample multiply_brightness(const SegmentationSample& sample, double m);
SegmentationSample add_rgb(const SegmentationSample& sample, std::array<double, 3> delta);
SegmentationSample add_hsv(const SegmentationSample& sample, double dh, double ds, double dv);
SegmentationSample contrast_normalize(const SegmentationSample& sample, double alpha);
/// Length is an odd kernel size >= 1; angle in degrees, 0 = horizontal.
SegmentationSample motion_blur(const SegmentationSample& sample, int length, double angle_degrees);
SegmentationSample simplex_overlay(const SegmentationSample& sample, double amplitude, double scale,
                                   std::uint64_t seed);

/// Normalized line kernel of motion_blur, length x length, row-major.
std::vector<double> motion_blur_kernel(int length, double angle_degrees);

std::array<double, 3> rgb_to_hsv(std::array<double, 3> rgb);
std::array<double, 3> hsv_to_rgb(std::array<double, 3> hsv);

struct SunPatch {
  Polygon polygon;
  double factor = 1.0;
};

/// Multiplies the interior of every patch by its factor, then clamps.
SegmentationSample apply_sun_patches(const SegmentationSample& sample, const std::vector<SunPatch>& patches);
/// Draws patches from the configured ranges; vertices uniform over the frame.
std::vector<SunPatch> draw_sun_patches(const SunPatchConfig& config, int height, int width, Rng& rng);
SegmentationSample sun_patches(const SegmentationSample& sample, const SunPatchConfig& config, Rng& rng);

/// Applies every enabled augmentation, each with its probability, in
/// kAugmentationOrder. Pure function of (sample, config, sample_index).
SegmentationSample apply_pipeline(const SegmentationSample& sample, const AugmentationConfig& config,
                                  std::uint64_t sample_index);

}  // namespace sgrt

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sgrt/augment.hpp"
#include "sgrt/layers.hpp"
#include "sgrt/train.hpp"

namespace sgrt {

struct ModelConfig {
  int input_height = 32;
  int input_width = 40;
  double leaky_slope = kDefaultLeakySlope;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Everything a training run needs. TrainConfig input sizes mirror the model section.
struct ResolvedConfig {
  TrainConfig train;
  AugmentationConfig augment;
  ModelConfig model;
};

/// JSON document with optional "train", "augment" and "model" objects.
/// Training keys may also appear at the top level. Missing keys keep their
/// defaults; unknown keys are errors.
ResolvedConfig config_from_json(std::string_view text, std::string_view origin = "config");
ResolvedConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ResolvedConfig& config);

}  // namespace sgrt

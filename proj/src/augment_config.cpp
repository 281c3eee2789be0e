#include <algorithm>
#include <array>
#include <cmath>

#include "sgrt/augment.hpp"
#include "sgrt/json_util.hpp"

namespace sgrt {
namespace {

using detail::json;
using detail::read_field;

Range range_from(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(ctx + " must be a two-element array [low, high]");
  return {v[0].get<double>(), v[1].get<double>()};
}

json to_json(const Range& r) { return json::array({r.low, r.high}); }

void read_range(const json& obj, std::string_view key, Range& out, const std::string& ctx) {
  if (const auto it = obj.find(key); it != obj.end()) out = range_from(*it, ctx + "." + std::string(key));
}

// Shared enabled/probability members plus op-specific keys.
template <typename C, typename Extra>
void read_op(const json& root, std::string_view name, C& op, std::initializer_list<std::string_view> keys,
             Extra&& extra) {
  const auto it = root.find(name);
  if (it == root.end()) return;
  const std::string ctx = "augment." + std::string(name);
  detail::require_object(*it, ctx);
  std::vector<std::string_view> allowed{"enabled", "probability"};
  allowed.insert(allowed.end(), keys.begin(), keys.end());
  for (const auto& [key, value] : it->items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key \"" + key + "\" in " + ctx);
  read_field(*it, "enabled", op.enabled, ctx);
  read_field(*it, "probability", op.probability, ctx);
  extra(*it, ctx);
}

template <typename C>
json op_json(const C& op) {
  return json{{"enabled", op.enabled}, {"probability", op.probability}};
}

}  // namespace

AugmentationConfig augmentation_config_from_json(std::string_view text) {
  const json root = detail::parse_json(text, "augmentation config");
  AugmentationConfig c;
  apply_augmentation_json(root, c);
  return c;
}

void apply_augmentation_json(const nlohmann::json& root, AugmentationConfig& c) {
  detail::require_object(root, "augment");
  detail::reject_unknown_keys(root,
                              {"master_seed", "order", "flip", "gaussian_noise", "multiply", "add_rgb", "add_hsv",
                               "simplex", "motion_blur", "contrast", "sun_patches"},
                              "augment");
  read_field(root, "master_seed", c.master_seed, "augment");
  if (const auto it = root.find("order"); it != root.end()) {
    std::vector<std::string> order;
    read_field(root, "order", order, "augment");
    if (!std::equal(order.begin(), order.end(), kAugmentationOrder.begin(), kAugmentationOrder.end()))
      throw ConfigError("augment.order is fixed and must equal the built-in order");
  }
  auto none = [](const json&, const std::string&) {};
  read_op(root, "flip", c.flip, {}, none);
  read_op(root, "gaussian_noise", c.gaussian_noise, {"sigma"},
          [&](const json& o, const std::string& ctx) { read_range(o, "sigma", c.gaussian_noise.sigma, ctx); });
  read_op(root, "multiply", c.multiply, {"factor"},
          [&](const json& o, const std::string& ctx) { read_range(o, "factor", c.multiply.factor, ctx); });
  read_op(root, "add_rgb", c.add_rgb, {"delta"},
          [&](const json& o, const std::string& ctx) { read_range(o, "delta", c.add_rgb.delta, ctx); });
  read_op(root, "add_hsv", c.add_hsv, {"hue", "saturation", "value"}, [&](const json& o, const std::string& ctx) {
    read_range(o, "hue", c.add_hsv.hue, ctx);
    read_range(o, "saturation", c.add_hsv.saturation, ctx);
    read_range(o, "value", c.add_hsv.value, ctx);
  });
  read_op(root, "simplex", c.simplex, {"amplitude", "scale"}, [&](const json& o, const std::string& ctx) {
    read_range(o, "amplitude", c.simplex.amplitude, ctx);
    read_range(o, "scale", c.simplex.scale, ctx);
  });
  read_op(root, "motion_blur", c.motion_blur, {"lengths", "angle"}, [&](const json& o, const std::string& ctx) {
    read_field(o, "lengths", c.motion_blur.lengths, ctx);
    read_range(o, "angle", c.motion_blur.angle, ctx);
  });
  read_op(root, "contrast", c.contrast, {"alpha"},
          [&](const json& o, const std::string& ctx) { read_range(o, "alpha", c.contrast.alpha, ctx); });
  read_op(root, "sun_patches", c.sun_patches, {"count", "factor"}, [&](const json& o, const std::string& ctx) {
    if (const auto it = o.find("count"); it != o.end()) {
      const Range r = range_from(*it, ctx + ".count");
      if (r.low != std::floor(r.low) || r.high != std::floor(r.high))
        throw ConfigError(ctx + ".count must hold integers");
      c.sun_patches.count = {static_cast<int>(r.low), static_cast<int>(r.high)};
    }
    read_range(o, "factor", c.sun_patches.factor, ctx);
  });
  c.validate();
}

nlohmann::json augmentation_json(const AugmentationConfig& c) {
  json root;
  root["master_seed"] = c.master_seed;
  root["order"] = json::array();
  for (auto name : kAugmentationOrder) root["order"].push_back(std::string(name));
  root["flip"] = op_json(c.flip);
  root["gaussian_noise"] = op_json(c.gaussian_noise);
  root["gaussian_noise"]["sigma"] = to_json(c.gaussian_noise.sigma);
  root["multiply"] = op_json(c.multiply);
  root["multiply"]["factor"] = to_json(c.multiply.factor);
  root["add_rgb"] = op_json(c.add_rgb);
  root["add_rgb"]["delta"] = to_json(c.add_rgb.delta);
  root["add_hsv"] = op_json(c.add_hsv);
  root["add_hsv"]["hue"] = to_json(c.add_hsv.hue);
  root["add_hsv"]["saturation"] = to_json(c.add_hsv.saturation);
  root["add_hsv"]["value"] = to_json(c.add_hsv.value);
  root["simplex"] = op_json(c.simplex);
  root["simplex"]["amplitude"] = to_json(c.simplex.amplitude);
  root["simplex"]["scale"] = to_json(c.simplex.scale);
  root["motion_blur"] = op_json(c.motion_blur);
  root["motion_blur"]["lengths"] = c.motion_blur.lengths;
  root["motion_blur"]["angle"] = to_json(c.motion_blur.angle);
  root["contrast"] = op_json(c.contrast);
  root["contrast"]["alpha"] = to_json(c.contrast.alpha);
  root["sun_patches"] = op_json(c.sun_patches);
  root["sun_patches"]["count"] = json::array({c.sun_patches.count.low, c.sun_patches.count.high});
  root["sun_patches"]["factor"] = to_json(c.sun_patches.factor);
  return root;
}

std::string augmentation_config_to_json(const AugmentationConfig& config) {
  return augmentation_json(config).dump(2);
}

}  // namespace sgrt

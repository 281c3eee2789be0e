#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sgrt/errors.hpp"

namespace sgrt::detail {

using json = nlohmann::json;

/// Parses text, turning syntax errors into ConfigError with line and column.
json parse_json(std::string_view text, std::string_view origin);

/// ConfigError naming the first key of `object` not in `allowed`.
void reject_unknown_keys(const json& object, std::span<const std::string_view> allowed, std::string_view context);
inline void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> allowed,
                                std::string_view context) {
  reject_unknown_keys(object, std::span<const std::string_view>(allowed.begin(), allowed.size()), context);
}

const json& require_object(const json& value, std::string_view context);

template <typename T>
void read_field(const json& object, std::string_view key, T& out, std::string_view context) {
  const auto it = object.find(key);
  if (it == object.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(context) + "." + std::string(key) + " has the wrong type: " + it->dump());
  }
}

}  // namespace sgrt::detail

namespace sgrt {

struct AugmentationConfig;

/// Overlays the keys present in `root` onto `config`, then validates.
void apply_augmentation_json(const nlohmann::json& root, AugmentationConfig& config);
nlohmann::json augmentation_json(const AugmentationConfig& config);

}  // namespace sgrt

#include "sgrt/json_util.hpp"

namespace sgrt::detail {

json parse_json(std::string_view text, std::string_view origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Byte offset to line and column.
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": JSON parse error: " + e.what());
  }
}

void reject_unknown_keys(const json& object, std::span<const std::string_view> allowed, std::string_view context) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key \"" + key + "\" in " + std::string(context));
  }
}

const json& require_object(const json& value, std::string_view context) {
  if (!value.is_object()) throw ConfigError(std::string(context) + " must be a JSON object");
  return value;
}

}  // namespace sgrt::detail

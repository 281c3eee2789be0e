#include "sgrt/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "sgrt/json_util.hpp"

namespace sgrt {
namespace {

using detail::json;
using detail::read_field;

constexpr std::array<std::string_view, 9> kTrainKeys = {
    "initial_lr",  "lr_decay_factor", "plateau_patience", "early_stop_patience", "improvement_tolerance",
    "batch_size",  "max_epochs",      "seed",             "checkpoint_every"};

void read_train(const json& obj, TrainConfig& t, std::string_view ctx) {
  read_field(obj, "initial_lr", t.initial_lr, ctx);
  read_field(obj, "lr_decay_factor", t.lr_decay_factor, ctx);
  read_field(obj, "plateau_patience", t.plateau_patience, ctx);
  read_field(obj, "early_stop_patience", t.early_stop_patience, ctx);
  read_field(obj, "improvement_tolerance", t.improvement_tolerance, ctx);
  read_field(obj, "batch_size", t.batch_size, ctx);
  read_field(obj, "max_epochs", t.max_epochs, ctx);
  read_field(obj, "seed", t.seed, ctx);
  read_field(obj, "checkpoint_every", t.checkpoint_every, ctx);
}

}  // namespace

void ModelConfig::validate() const {
  if (input_height < 4 || input_width < 4 || input_height % 4 || input_width % 4)
    throw ConfigError("model input size must be at least 4x4 and divisible by 4, got " +
                      std::to_string(input_height) + "x" + std::to_string(input_width));
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("model.leaky_slope must be in (0, 1)");
}

ResolvedConfig config_from_json(std::string_view text, std::string_view origin) {
  const json root = detail::parse_json(text, origin);
  detail::require_object(root, std::string(origin));
  std::vector<std::string_view> allowed{"train", "augment", "model"};
  allowed.insert(allowed.end(), kTrainKeys.begin(), kTrainKeys.end());
  for (const auto& [key, value] : root.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(std::string(origin) + ": unknown key \"" + key + "\"");

  ResolvedConfig c;
  read_train(root, c.train, "config");
  if (const auto it = root.find("train"); it != root.end()) {
    detail::require_object(*it, "train");
    detail::reject_unknown_keys(*it, kTrainKeys, std::string(origin) + " train section");
    read_train(*it, c.train, "train");
  }
  if (const auto it = root.find("model"); it != root.end()) {
    detail::require_object(*it, "model");
    detail::reject_unknown_keys(*it, {"input_height", "input_width", "leaky_slope", "seed"},
                                std::string(origin) + " model section");
    read_field(*it, "input_height", c.model.input_height, "model");
    read_field(*it, "input_width", c.model.input_width, "model");
    read_field(*it, "leaky_slope", c.model.leaky_slope, "model");
    read_field(*it, "seed", c.model.seed, "model");
  }
  if (const auto it = root.find("augment"); it != root.end()) apply_augmentation_json(*it, c.augment);
  c.model.validate();
  c.train.input_height = c.model.input_height;
  c.train.input_width = c.model.input_width;
  c.train.validate();
  c.augment.validate();
  return c;
}

ResolvedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text, path.string());
}

std::string config_to_json(const ResolvedConfig& c) {
  json root;
  root["train"] = {{"initial_lr", c.train.initial_lr},
                   {"lr_decay_factor", c.train.lr_decay_factor},
                   {"plateau_patience", c.train.plateau_patience},
                   {"early_stop_patience", c.train.early_stop_patience},
                   {"improvement_tolerance", c.train.improvement_tolerance},
                   {"batch_size", c.train.batch_size},
                   {"max_epochs", c.train.max_epochs},
                   {"seed", c.train.seed},
                   {"checkpoint_every", c.train.checkpoint_every}};
  root["model"] = {{"input_height", c.model.input_height},
                   {"input_width", c.model.input_width},
                   {"leaky_slope", c.model.leaky_slope},
                   {"seed", c.model.seed}};
  root["augment"] = augmentation_json(c.augment);
  return root.dump(2);
}

}  // namespace sgrt

#include "mpath/cli/run_config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mpath/errors.hpp"
#include "mpath/train/hyperparams.hpp"

namespace mpath::cli {

namespace {

using store::Json;

template <typename T>
T read(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

data::PreprocessConfig preprocess_from_json(const Json& j) {
  const std::string where = "seed.preprocess";
  store::require_known_keys(j,
                            {"cropped_area_range_min", "cropped_aspect_ratio_range_min", "flip_left_right",
                             "brightness_delta", "contrast_delta", "saturation_delta", "hue_delta",
                             "image_quality_delta"},
                            where);
  data::PreprocessConfig p;
  p.cropped_area_range_min = read(j, "cropped_area_range_min", p.cropped_area_range_min, where);
  p.cropped_aspect_ratio_range_min = read(j, "cropped_aspect_ratio_range_min", p.cropped_aspect_ratio_range_min, where);
  p.flip_left_right = read(j, "flip_left_right", p.flip_left_right, where);
  p.brightness_delta = read(j, "brightness_delta", p.brightness_delta, where);
  p.contrast_delta = read(j, "contrast_delta", p.contrast_delta, where);
  p.saturation_delta = read(j, "saturation_delta", p.saturation_delta, where);
  p.hue_delta = read(j, "hue_delta", p.hue_delta, where);
  p.image_quality_delta = read(j, "image_quality_delta", p.image_quality_delta, where);
  try {
    p.validate();
  } catch (const ValueError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return p;
}

Json preprocess_to_json(const data::PreprocessConfig& p) {
  return {{"cropped_area_range_min", p.cropped_area_range_min},
          {"cropped_aspect_ratio_range_min", p.cropped_aspect_ratio_range_min},
          {"flip_left_right", p.flip_left_right},
          {"brightness_delta", p.brightness_delta},
          {"contrast_delta", p.contrast_delta},
          {"saturation_delta", p.saturation_delta},
          {"hue_delta", p.hue_delta},
          {"image_quality_delta", p.image_quality_delta}};
}

train::SeedConfig seed_from_json(const Json& j) {
  const std::string where = "seed";
  store::require_known_keys(j,
                            {"base_task", "hidden", "base_steps", "finetune_steps", "batch_size", "learning_rate",
                             "momentum", "nesterov", "warmup_ratio", "preprocess", "seed"},
                            where);
  train::SeedConfig c;
  c.base_task = read<std::string>(j, "base_task", "", where);
  c.hidden = read(j, "hidden", c.hidden, where);
  c.base_steps = read(j, "base_steps", c.base_steps, where);
  c.finetune_steps = read(j, "finetune_steps", c.finetune_steps, where);
  c.batch_size = read(j, "batch_size", c.batch_size, where);
  c.learning_rate = read(j, "learning_rate", c.learning_rate, where);
  c.momentum = read(j, "momentum", c.momentum, where);
  c.nesterov = read(j, "nesterov", c.nesterov, where);
  c.warmup_ratio = read(j, "warmup_ratio", c.warmup_ratio, where);
  if (j.contains("preprocess")) c.preprocess = preprocess_from_json(j.at("preprocess"));
  c.seed = read(j, "seed", c.seed, where);
  if (c.base_task.empty()) throw ConfigError("seed: base_task is required");
  if (c.hidden.empty() || std::find(c.hidden.begin(), c.hidden.end(), 0u) != c.hidden.end())
    throw ConfigError("seed: hidden must list positive widths");
  if (c.base_steps == 0 || c.finetune_steps == 0 || c.batch_size == 0)
    throw ConfigError("seed: steps and batch_size must be positive");
  if (!(c.learning_rate > 0.0)) throw ConfigError("seed: learning_rate must be positive");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("seed: momentum must lie in [0, 1)");
  if (std::find(train::kWarmupRatioValues.begin(), train::kWarmupRatioValues.end(), c.warmup_ratio) ==
      train::kWarmupRatioValues.end())
    throw ConfigError("seed: warmup_ratio is not an admissible value");
  return c;
}

Json seed_to_json(const train::SeedConfig& c) {
  return {{"base_task", c.base_task},       {"hidden", c.hidden},
          {"base_steps", c.base_steps},     {"finetune_steps", c.finetune_steps},
          {"batch_size", c.batch_size},     {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},         {"nesterov", c.nesterov},
          {"warmup_ratio", c.warmup_ratio}, {"preprocess", preprocess_to_json(c.preprocess)},
          {"seed", c.seed}};
}

}  // namespace

RunConfig parse_run_config(const Json& j) {
  store::require_known_keys(j, {"store_dir", "output_dir", "tasks", "seed", "agent", "replicas"}, "config");
  RunConfig c;
  c.store_dir = read<std::string>(j, "store_dir", "", "config");
  c.output_dir = read<std::string>(j, "output_dir", "", "config");
  if (c.store_dir.empty() || c.output_dir.empty()) throw ConfigError("config: store_dir and output_dir are required");
  if (!j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty())
    throw ConfigError("config: 'tasks' must be a non-empty array");
  std::set<std::string> ids;
  for (const auto& t : j["tasks"]) {
    c.tasks.push_back(store::task_from_json(t));
    if (!ids.insert(c.tasks.back().task_id).second)
      throw ConfigError("config: duplicate task '" + c.tasks.back().task_id + "'");
  }
  if (!j.contains("seed")) throw ConfigError("config: missing 'seed' section");
  c.seed = seed_from_json(j["seed"]);
  if (!ids.count(c.seed.base_task)) throw ConfigError("seed: unknown base_task '" + c.seed.base_task + "'");
  if (!j.contains("agent")) throw ConfigError("config: missing 'agent' section");
  c.agent = evo::config_from_json(j["agent"]);
  if (!ids.count(c.agent.target_task)) throw ConfigError("agent: unknown target_task '" + c.agent.target_task + "'");
  c.replicas = read(j, "replicas", c.replicas, "config");
  if (c.replicas == 0) throw ConfigError("config: replicas must be positive");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  RunConfig c = parse_run_config(j);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string& dir) {
    if (fs::path(dir).is_relative()) dir = (base / dir).lexically_normal().string();
  };
  resolve(c.store_dir);
  resolve(c.output_dir);
  for (auto& t : c.tasks)
    if (auto* idx = std::get_if<data::IdxSource>(&t.source)) {
      if (fs::path(idx->images_path).is_relative()) idx->images_path = (base / idx->images_path).string();
      if (fs::path(idx->labels_path).is_relative()) idx->labels_path = (base / idx->labels_path).string();
    }
  return c;
}

Json run_config_to_json(const RunConfig& c) {
  Json j;
  j["store_dir"] = c.store_dir;
  j["output_dir"] = c.output_dir;
  j["tasks"] = Json::array();
  for (const auto& t : c.tasks) j["tasks"].push_back(store::task_to_json(t));
  j["seed"] = seed_to_json(c.seed);
  j["agent"] = evo::config_to_json(c.agent);
  j["replicas"] = c.replicas;
  return j;
}

}  // namespace mpath::cli

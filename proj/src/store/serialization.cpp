#include "mpath/store/serialization.hpp"

#include <algorithm>

#include "mpath/errors.hpp"

namespace mpath::store {

namespace {

template <typename T>
T get(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

}  // namespace

void require_known_keys(const Json& object, std::initializer_list<std::string_view> allowed, const std::string& where) {
  require_object(object, where);
  for (const auto& item : object.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

Json task_to_json(const data::TaskSpec& task) {
  Json j;
  j["task_id"] = task.task_id;
  j["num_classes"] = task.num_classes;
  j["resolution"] = task.resolution;
  j["channels"] = task.channels;
  j["splits"] = {{"train", task.splits.train}, {"validation", task.splits.validation}, {"test", task.splits.test}};
  if (const auto* fam = std::get_if<data::SyntheticFamily>(&task.source)) {
    j["synthetic"] = {{"seed", fam->seed},       {"class_shapes", fam->class_shapes},
                      {"textures", fam->textures}, {"hue_min", fam->hue_min},
                      {"hue_max", fam->hue_max},   {"noise", fam->noise},
                      {"size_min", fam->size_min}, {"size_max", fam->size_max}};
  } else {
    const auto& idx = std::get<data::IdxSource>(task.source);
    j["idx"] = {{"images", idx.images_path}, {"labels", idx.labels_path}, {"seed", idx.seed}};
  }
  return j;
}

data::TaskSpec task_from_json(const Json& j) {
  const std::string where = "task " + (j.is_object() && j.contains("task_id") ? j["task_id"].dump() : "?");
  require_known_keys(j, {"task_id", "num_classes", "resolution", "channels", "splits", "synthetic", "idx"}, where);
  data::TaskSpec t;
  t.task_id = get<std::string>(j, "task_id", where);
  t.num_classes = get<std::size_t>(j, "num_classes", where);
  t.resolution = get<std::size_t>(j, "resolution", where);
  t.channels = get_or<std::size_t>(j, "channels", 3, where);
  const Json& s = j.contains("splits") ? j["splits"] : throw ConfigError(where + ": missing key 'splits'");
  require_known_keys(s, {"train", "validation", "test"}, where + ".splits");
  t.splits = {get<std::size_t>(s, "train", where), get<std::size_t>(s, "validation", where),
              get<std::size_t>(s, "test", where)};
  if (j.contains("synthetic") == j.contains("idx"))
    throw ConfigError(where + ": exactly one of 'synthetic' or 'idx' is required");
  if (j.contains("synthetic")) {
    const Json& f = j["synthetic"];
    const std::string fw = where + ".synthetic";
    require_known_keys(f, {"seed", "class_shapes", "textures", "hue_min", "hue_max", "noise", "size_min", "size_max"},
                       fw);
    data::SyntheticFamily fam;
    fam.seed = get<std::uint64_t>(f, "seed", fw);
    if (f.contains("class_shapes")) {
      fam.class_shapes = get<std::vector<int>>(f, "class_shapes", fw);
    } else {
      for (std::size_t k = 0; k < t.num_classes; ++k) fam.class_shapes.push_back(static_cast<int>(k));
    }
    fam.textures = get_or<std::vector<int>>(f, "textures", {0}, fw);
    fam.hue_min = get_or(f, "hue_min", fam.hue_min, fw);
    fam.hue_max = get_or(f, "hue_max", fam.hue_max, fw);
    fam.noise = get_or(f, "noise", fam.noise, fw);
    fam.size_min = get_or(f, "size_min", fam.size_min, fw);
    fam.size_max = get_or(f, "size_max", fam.size_max, fw);
    t.source = fam;
  } else {
    const Json& f = j["idx"];
    const std::string fw = where + ".idx";
    require_known_keys(f, {"images", "labels", "seed"}, fw);
    t.source = data::IdxSource{get<std::string>(f, "images", fw), get<std::string>(f, "labels", fw),
                               get_or<std::uint64_t>(f, "seed", 0, fw)};
    if (!j.contains("channels")) t.channels = 1;
  }
  try {
    t.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  return t;
}

Json hyperparams_to_json(const train::Hyperparams& hp) {
  Json j = Json::object();
  for (auto f : train::kAllHyperparamFields) {
    const double v = train::get_field(hp, f);
    if (f == train::HyperparamField::nesterov || f == train::HyperparamField::flip_left_right)
      j[std::string(train::field_name(f))] = v != 0.0;
    else
      j[std::string(train::field_name(f))] = v;
  }
  return j;
}

train::Hyperparams hyperparams_from_json(const Json& j) {
  require_object(j, "hyperparams");
  train::Hyperparams hp;
  for (const auto& item : j.items()) {
    train::HyperparamField f;
    try {
      f = train::parse_field(item.key());
    } catch (const ValueError&) {
      throw ConfigError("hyperparams: unknown key '" + item.key() + "'");
    }
    if (item.value().is_boolean())
      train::set_field(hp, f, item.value().get<bool>() ? 1.0 : 0.0);
    else if (item.value().is_number())
      train::set_field(hp, f, item.value().get<double>());
    else
      throw ConfigError("hyperparams: bad value for '" + item.key() + "'");
  }
  try {
    hp.validate();
  } catch (const ValueError& e) {
    throw ConfigError(std::string("hyperparams: ") + e.what());
  }
  return hp;
}

Json path_to_json(const PathSpec& p) {
  return {{"path_id", p.path_id},
          {"task_id", p.task_id},
          {"module_ids", p.module_ids},
          {"input_resolution", p.input_resolution},
          {"channels", p.channels}};
}

PathSpec path_from_json(const Json& j) {
  const std::string where = "path";
  require_known_keys(j, {"path_id", "task_id", "module_ids", "input_resolution", "channels"}, where);
  PathSpec p;
  p.path_id = get<std::string>(j, "path_id", where);
  p.task_id = get<std::string>(j, "task_id", where);
  p.module_ids = get<std::vector<std::string>>(j, "module_ids", where);
  p.input_resolution = get<std::size_t>(j, "input_resolution", where);
  p.channels = get<std::size_t>(j, "channels", where);
  return p;
}

Json model_to_json(const PublishedModel& m) {
  Json j;
  j["model_id"] = m.model_id;
  j["task_id"] = m.task_id;
  j["main_path_id"] = m.main_path_id;
  j["support_path_ids"] = m.support_path_ids;
  j["connector_ids"] = m.connector_ids;
  j["router_id"] = m.router_id ? Json(*m.router_id) : Json(nullptr);
  j["aggregation"] = std::string(arch::aggregation_name(m.aggregation));
  j["w_main_star"] = m.w_main_star;
  j["zero_bias_init"] = m.zero_bias_init;
  j["ema"] = m.ema;
  j["hyperparams"] = hyperparams_to_json(m.hyperparams);
  j["validation_score"] = m.validation_score;
  j["test_accuracy"] = m.test_accuracy ? Json(*m.test_accuracy) : Json(nullptr);
  j["parent_id"] = m.parent_id ? Json(*m.parent_id) : Json(nullptr);
  return j;
}

PublishedModel model_from_json(const Json& j) {
  const std::string where = "model";
  require_known_keys(j,
                     {"model_id", "task_id", "main_path_id", "support_path_ids", "connector_ids", "router_id",
                      "aggregation", "w_main_star", "zero_bias_init", "ema", "hyperparams", "validation_score", "test_accuracy",
                      "parent_id"},
                     where);
  PublishedModel m;
  m.model_id = get<std::string>(j, "model_id", where);
  m.task_id = get<std::string>(j, "task_id", where);
  m.main_path_id = get<std::string>(j, "main_path_id", where);
  m.support_path_ids = get<std::vector<std::string>>(j, "support_path_ids", where);
  m.connector_ids = get<std::vector<std::string>>(j, "connector_ids", where);
  if (!j.at("router_id").is_null()) m.router_id = get<std::string>(j, "router_id", where);
  m.aggregation = arch::parse_aggregation(get<std::string>(j, "aggregation", where));
  m.w_main_star = get<double>(j, "w_main_star", where);
  m.zero_bias_init = j.value("zero_bias_init", false);
  m.ema = get<std::vector<double>>(j, "ema", where);
  m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
  m.validation_score = get<double>(j, "validation_score", where);
  if (!j.at("test_accuracy").is_null()) m.test_accuracy = get<double>(j, "test_accuracy", where);
  if (!j.at("parent_id").is_null()) m.parent_id = get<std::string>(j, "parent_id", where);
  return m;
}

Json tensor_to_json(const ad::Tensor& t) { return {{"shape", t.shape()}, {"data", t.values()}}; }

ad::Tensor tensor_from_json(const Json& j) {
  return ad::Tensor(get<ad::Shape>(j, "shape", "tensor"), get<std::vector<double>>(j, "data", "tensor"));
}

Json module_to_json(const ModuleDef& m) {
  Json j;
  j["module_id"] = m.module_id;
  j["kind"] = std::string(kind_name(m.kind));
  j["kernel"] = tensor_to_json(m.kernel);
  j["bias"] = tensor_to_json(m.bias);
  j["frozen"] = m.frozen;
  j["parent_module_id"] = m.parent_module_id ? Json(*m.parent_module_id) : Json(nullptr);
  j["last_trained_task"] = m.last_trained_task;
  return j;
}

ModuleDef module_from_json(const Json& j) {
  const std::string where = "module";
  ModuleDef m;
  m.module_id = get<std::string>(j, "module_id", where);
  m.kind = parse_kind(get<std::string>(j, "kind", where));
  m.kernel = tensor_from_json(j.at("kernel"));
  m.bias = tensor_from_json(j.at("bias"));
  m.frozen = get<bool>(j, "frozen", where);
  if (!j.at("parent_module_id").is_null()) m.parent_module_id = get<std::string>(j, "parent_module_id", where);
  m.last_trained_task = get<std::string>(j, "last_trained_task", where);
  return m;
}

}  // namespace mpath::store

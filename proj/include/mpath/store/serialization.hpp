#ifndef MPATH_STORE_SERIALIZATION_HPP_
#define MPATH_STORE_SERIALIZATION_HPP_

// JSON mappings for the structured-text parts of checkpoints, run configs and
// agent state. Parsers are strict: unknown keys raise ConfigError.

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mpath/data/task.hpp"
#include "mpath/store/store.hpp"
#include "mpath/train/hyperparams.hpp"

namespace mpath::store {

using Json = nlohmann::json;

/// Throws ConfigError naming the first key of `object` not in `allowed`.
void require_known_keys(const Json& object, std::initializer_list<std::string_view> allowed, const std::string& where);

Json task_to_json(const data::TaskSpec& task);
data::TaskSpec task_from_json(const Json& j);

Json hyperparams_to_json(const train::Hyperparams& hp);
/// Missing keys keep their defaults.
train::Hyperparams hyperparams_from_json(const Json& j);

Json path_to_json(const PathSpec& path);
PathSpec path_from_json(const Json& j);

Json model_to_json(const PublishedModel& model);
PublishedModel model_from_json(const Json& j);

Json tensor_to_json(const ad::Tensor& t);
ad::Tensor tensor_from_json(const Json& j);

Json module_to_json(const ModuleDef& m);
ModuleDef module_from_json(const Json& j);

}  // namespace mpath::store

#endif  // MPATH_STORE_SERIALIZATION_HPP_

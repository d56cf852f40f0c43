#include "mpath/store/store.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "mpath/errors.hpp"

namespace mpath::store {

SystemStore::SystemStore(const SystemStore& other) {
  std::shared_lock lock(other.mutex_);
  tasks_ = other.tasks_;
  task_order_ = other.task_order_;
  modules_ = other.modules_;
  module_order_ = other.module_order_;
  paths_ = other.paths_;
  path_order_ = other.path_order_;
  models_ = other.models_;
  model_order_ = other.model_order_;
}

SystemStore& SystemStore::operator=(const SystemStore& other) {
  if (this == &other) return *this;
  SystemStore copy(other);
  std::unique_lock lock(mutex_);
  tasks_ = std::move(copy.tasks_);
  task_order_ = std::move(copy.task_order_);
  modules_ = std::move(copy.modules_);
  module_order_ = std::move(copy.module_order_);
  paths_ = std::move(copy.paths_);
  path_order_ = std::move(copy.path_order_);
  models_ = std::move(copy.models_);
  model_order_ = std::move(copy.model_order_);
  return *this;
}

void SystemStore::register_task(data::TaskSpec task) {
  task.validate();
  if (!valid_id(task.task_id)) throw ValueError("invalid task id '" + task.task_id + "'");
  std::unique_lock lock(mutex_);
  if (tasks_.count(task.task_id)) throw StoreError("duplicate task id '" + task.task_id + "'");
  task_order_.push_back(task.task_id);
  const std::string id = task.task_id;
  tasks_.emplace(id, std::move(task));
}

bool SystemStore::has_task(const std::string& task_id) const {
  std::shared_lock lock(mutex_);
  return tasks_.count(task_id) != 0;
}

const data::TaskSpec& SystemStore::task(const std::string& task_id) const {
  std::shared_lock lock(mutex_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw StoreError("unknown task '" + task_id + "'");
  return it->second;
}

std::vector<std::string> SystemStore::task_ids() const {
  std::shared_lock lock(mutex_);
  return task_order_;
}

void SystemStore::check_fresh_module(const ModuleDef& m) const {
  m.validate();
  if (modules_.count(m.module_id)) throw StoreError("duplicate module id '" + m.module_id + "'");
}

std::string SystemStore::publish_path(PathSpec path, std::vector<ModuleDef> new_modules) {
  std::unique_lock lock(mutex_);
  if (!valid_id(path.path_id)) throw ValueError("invalid path id '" + path.path_id + "'");
  if (paths_.count(path.path_id)) throw StoreError("duplicate path id '" + path.path_id + "'");
  auto task_it = tasks_.find(path.task_id);
  if (task_it == tasks_.end()) throw StoreError("path " + path.path_id + " refers to unknown task " + path.task_id);
  if (path.module_ids.empty()) throw StoreError("path " + path.path_id + " has no modules");
  if (path.channels != 1 && path.channels != 3) throw StoreError("path " + path.path_id + ": channels must be 1 or 3");

  std::map<std::string, const ModuleDef*> fresh;
  for (const ModuleDef& m : new_modules) {
    check_fresh_module(m);
    if (!fresh.emplace(m.module_id, &m).second) throw StoreError("module id '" + m.module_id + "' given twice");
  }
  auto lookup = [&](const std::string& id) -> const ModuleDef& {
    if (auto f = fresh.find(id); f != fresh.end()) return *f->second;
    if (auto s = modules_.find(id); s != modules_.end()) return *s->second;
    throw StoreError("path " + path.path_id + " has a dangling reference to module '" + id + "'");
  };

  std::size_t width = path.input_dim();
  for (std::size_t i = 0; i < path.module_ids.size(); ++i) {
    const ModuleDef& m = lookup(path.module_ids[i]);
    if (m.in_dim() != width)
      throw StoreError("path " + path.path_id + ": module " + m.module_id + " expects width " +
                       std::to_string(m.in_dim()) + " but receives " + std::to_string(width));
    const bool last = i + 1 == path.module_ids.size();
    if (last != (m.kind == ModuleKind::head))
      throw StoreError("path " + path.path_id + " must end in exactly one head module");
    if (m.kind == ModuleKind::connector || m.kind == ModuleKind::router)
      throw StoreError("path " + path.path_id + " cannot contain " + std::string(kind_name(m.kind)) + " modules");
    width = m.out_dim();
  }
  if (width != task_it->second.num_classes)
    throw StoreError("path " + path.path_id + ": head width " + std::to_string(width) + " != num_classes " +
                     std::to_string(task_it->second.num_classes));
  for (const auto& [id, _] : fresh)
    if (std::find(path.module_ids.begin(), path.module_ids.end(), id) == path.module_ids.end())
      throw StoreError("module '" + id + "' is not part of path " + path.path_id);

  for (ModuleDef& m : new_modules) {
    m.frozen = true;
    module_order_.push_back(m.module_id);
    const std::string id = m.module_id;
    modules_.emplace(id, std::make_shared<const ModuleDef>(std::move(m)));
  }
  const std::string id = path.path_id;
  path_order_.push_back(id);
  paths_.emplace(id, std::move(path));
  return id;
}

void SystemStore::publish_model(PublishedModel model, std::vector<ModuleDef> modules) {
  std::unique_lock lock(mutex_);
  if (!valid_id(model.model_id)) throw ValueError("invalid model id '" + model.model_id + "'");
  if (models_.count(model.model_id)) throw StoreError("duplicate model id '" + model.model_id + "'");
  if (!tasks_.count(model.task_id)) throw StoreError("model " + model.model_id + " refers to unknown task");
  if (!paths_.count(model.main_path_id))
    throw StoreError("model " + model.model_id + " refers to unknown main path " + model.main_path_id);
  for (const auto& p : model.support_path_ids)
    if (!paths_.count(p)) throw StoreError("model " + model.model_id + " refers to unknown support path " + p);
  if (model.connector_ids.size() != model.support_path_ids.size())
    throw StoreError("model " + model.model_id + ": one connector per support path required");

  std::map<std::string, const ModuleDef*> fresh;
  for (const ModuleDef& m : modules) {
    check_fresh_module(m);
    if (m.kind != ModuleKind::connector && m.kind != ModuleKind::router)
      throw StoreError("model " + model.model_id + " may only add connector/router modules");
    fresh.emplace(m.module_id, &m);
  }
  for (const auto& [id, _] : fresh)
    if (std::find(model.connector_ids.begin(), model.connector_ids.end(), id) == model.connector_ids.end() &&
        model.router_id != id)
      throw StoreError("module '" + id + "' is not referenced by model " + model.model_id);
  auto exists = [&](const std::string& id) { return fresh.count(id) || modules_.count(id); };
  for (const auto& c : model.connector_ids)
    if (!exists(c)) throw StoreError("model " + model.model_id + " has a dangling connector reference '" + c + "'");
  if (model.router_id && !exists(*model.router_id))
    throw StoreError("model " + model.model_id + " has a dangling router reference");

  for (ModuleDef& m : modules) {
    m.frozen = true;
    module_order_.push_back(m.module_id);
    const std::string id = m.module_id;
    modules_.emplace(id, std::make_shared<const ModuleDef>(std::move(m)));
  }
  const std::string id = model.model_id;
  model_order_.push_back(id);
  models_.emplace(id, std::move(model));
}

bool SystemStore::has_module(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return modules_.count(id) != 0;
}

const ModuleDef& SystemStore::module(const std::string& id) const { return *module_ptr(id); }

std::shared_ptr<const ModuleDef> SystemStore::module_ptr(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = modules_.find(id);
  if (it == modules_.end()) throw StoreError("unknown module '" + id + "'");
  return it->second;
}

std::vector<std::string> SystemStore::module_ids() const {
  std::shared_lock lock(mutex_);
  return module_order_;
}

bool SystemStore::has_path(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return paths_.count(id) != 0;
}

const PathSpec& SystemStore::path(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = paths_.find(id);
  if (it == paths_.end()) throw StoreError("unknown path '" + id + "'");
  return it->second;
}

std::vector<std::string> SystemStore::path_ids() const {
  std::shared_lock lock(mutex_);
  return path_order_;
}

std::vector<std::string> SystemStore::paths_for_task(const std::string& task_id) const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& id : path_order_)
    if (paths_.at(id).task_id == task_id) out.push_back(id);
  return out;
}

bool SystemStore::has_model(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return models_.count(id) != 0;
}

const PublishedModel& SystemStore::model(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = models_.find(id);
  if (it == models_.end()) throw StoreError("unknown model '" + id + "'");
  return it->second;
}

std::vector<std::string> SystemStore::model_ids() const {
  std::shared_lock lock(mutex_);
  return model_order_;
}

std::size_t SystemStore::referer_count(const std::string& module_id) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, p] : paths_)
    n += static_cast<std::size_t>(std::count(p.module_ids.begin(), p.module_ids.end(), module_id));
  for (const auto& [_, m] : models_) {
    n += static_cast<std::size_t>(std::count(m.connector_ids.begin(), m.connector_ids.end(), module_id));
    if (m.router_id == module_id) ++n;
  }
  return n;
}

namespace {

bool same_task(const data::TaskSpec& a, const data::TaskSpec& b) {
  if (a.task_id != b.task_id || a.num_classes != b.num_classes || a.resolution != b.resolution ||
      a.channels != b.channels || a.splits.train != b.splits.train || a.splits.validation != b.splits.validation ||
      a.splits.test != b.splits.test || a.source.index() != b.source.index())
    return false;
  if (const auto* fa = std::get_if<data::SyntheticFamily>(&a.source)) {
    const auto& fb = std::get<data::SyntheticFamily>(b.source);
    return fa->seed == fb.seed && fa->class_shapes == fb.class_shapes && fa->textures == fb.textures &&
           fa->hue_min == fb.hue_min && fa->hue_max == fb.hue_max && fa->noise == fb.noise &&
           fa->size_min == fb.size_min && fa->size_max == fb.size_max;
  }
  const auto& ia = std::get<data::IdxSource>(a.source);
  const auto& ib = std::get<data::IdxSource>(b.source);
  return ia.images_path == ib.images_path && ia.labels_path == ib.labels_path && ia.seed == ib.seed;
}

}  // namespace

bool SystemStore::equals(const SystemStore& other) const {
  std::shared_lock a(mutex_);
  std::shared_lock b(other.mutex_);
  if (task_order_ != other.task_order_ || module_order_ != other.module_order_ || path_order_ != other.path_order_ ||
      model_order_ != other.model_order_)
    return false;
  for (const auto& [id, t] : tasks_)
    if (!same_task(t, other.tasks_.at(id))) return false;
  for (const auto& [id, m] : modules_)
    if (!(*m == *other.modules_.at(id))) return false;
  return paths_ == other.paths_ && models_ == other.models_;
}

}  // namespace mpath::store

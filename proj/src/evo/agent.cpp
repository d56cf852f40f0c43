#include "mpath/evo/agent.hpp"

#include <algorithm>
#include <exception>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "mpath/errors.hpp"

namespace mpath::evo {

std::string_view ablation_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::none:
      return "none";
    case AblationMode::standard_aggregation:
      return "standard-aggregation";
    case AblationMode::sum_aggregation:
      return "sum-aggregation";
    case AblationMode::zero_bias_init:
      return "zero-bias-init";
    case AblationMode::unit_lr_multiplier:
      return "unit-lr-multiplier";
  }
  return "?";
}

AblationMode parse_ablation(std::string_view name) {
  for (auto m : {AblationMode::none, AblationMode::standard_aggregation, AblationMode::sum_aggregation,
                 AblationMode::zero_bias_init, AblationMode::unit_lr_multiplier})
    if (ablation_name(m) == name) return m;
  throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  if (target_task.empty()) throw ConfigError("agent: target_task is required");
  if (cycles == 0) throw ConfigError("agent: cycles must be positive");
  if (samples_per_cycle == 0) throw ConfigError("agent: samples_per_cycle must be positive");
  if (workers == 0) throw ConfigError("agent: workers must be positive");
  if (default_num_paths < 2 || default_num_paths > max_paths)
    throw ConfigError("agent: need 2 <= default_num_paths <= max_paths");
  if (!(mutation_probability > 0.0 && mutation_probability <= 1.0))
    throw ConfigError("agent: mutation_probability must lie in (0, 1]");
  if (!(w_main_star > 0.0 && w_main_star < 1.0)) throw ConfigError("agent: w_main_star must lie in (0, 1)");
  if (budget.batch_size == 0) throw ConfigError("agent: batch_size must be positive");
  if (forced_first_support) {
    if (std::find(support_path_exclusions.begin(), support_path_exclusions.end(), *forced_first_support) !=
        support_path_exclusions.end())
      throw ConfigError("agent: forced support " + *forced_first_support + " is excluded");
    if (*forced_first_support == main_path_id)
      throw ConfigError("agent: forced support equals the main path");
  }
}

arch::RouterOptions AgentConfig::routing() const {
  arch::RouterOptions r;
  r.w_main_star = w_main_star;
  if (ablation == AblationMode::standard_aggregation) r.aggregation = arch::AggregationMode::standard;
  if (ablation == AblationMode::sum_aggregation) r.aggregation = arch::AggregationMode::sum;
  r.zero_bias_init = ablation == AblationMode::zero_bias_init;
  return r;
}

store::Json config_to_json(const AgentConfig& c) {
  store::Json j;
  j["target_task"] = c.target_task;
  j["main_path_id"] = c.main_path_id;
  j["cycles"] = c.cycles;
  j["samples_per_cycle"] = c.samples_per_cycle;
  j["workers"] = c.workers;
  j["max_paths"] = c.max_paths;
  j["default_num_paths"] = c.default_num_paths;
  j["support_path_exclusions"] = c.support_path_exclusions;
  j["forced_first_support"] = c.forced_first_support ? store::Json(*c.forced_first_support) : store::Json(nullptr);
  j["ablation"] = std::string(ablation_name(c.ablation));
  j["mutation_probability"] = c.mutation_probability;
  j["w_main_star"] = c.w_main_star;
  j["train_steps"] = c.budget.train_steps;
  j["batch_size"] = c.budget.batch_size;
  j["seed"] = c.seed;
  j["model_prefix"] = c.model_prefix;
  return j;
}

AgentConfig config_from_json(const store::Json& j) {
  store::require_known_keys(j,
                            {"target_task", "main_path_id", "cycles", "samples_per_cycle", "workers", "max_paths",
                             "default_num_paths", "support_path_exclusions", "forced_first_support", "ablation",
                             "mutation_probability", "w_main_star", "train_steps", "batch_size", "seed", "model_prefix"},
                            "agent");
  AgentConfig c;
  try {
    c.target_task = j.at("target_task").get<std::string>();
    c.main_path_id = j.value("main_path_id", c.main_path_id);
    c.cycles = j.value("cycles", c.cycles);
    c.samples_per_cycle = j.value("samples_per_cycle", c.samples_per_cycle);
    c.workers = j.value("workers", c.workers);
    c.max_paths = j.value("max_paths", c.max_paths);
    c.default_num_paths = j.value("default_num_paths", c.default_num_paths);
    c.support_path_exclusions = j.value("support_path_exclusions", c.support_path_exclusions);
    if (j.contains("forced_first_support") && !j["forced_first_support"].is_null())
      c.forced_first_support = j["forced_first_support"].get<std::string>();
    c.ablation = parse_ablation(j.value("ablation", std::string("none")));
    c.mutation_probability = j.value("mutation_probability", c.mutation_probability);
    c.w_main_star = j.value("w_main_star", c.w_main_star);
    c.budget.train_steps = j.value("train_steps", c.budget.train_steps);
    c.budget.batch_size = j.value("batch_size", c.budget.batch_size);
    c.seed = j.value("seed", c.seed);
    c.model_prefix = j.value("model_prefix", c.model_prefix);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("agent: ") + e.what());
  }
  c.validate();
  return c;
}

void Population::insert(arch::MultipathModel model, std::size_t creation_index) {
  entries_.push_back({std::move(model), creation_index});
  sort();
}

void Population::sort() {
  std::stable_sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    const double sa = a.model.score.value_or(0.0), sb = b.model.score.value_or(0.0);
    if (sa != sb) return sa > sb;
    return a.creation_index < b.creation_index;
  });
}

std::optional<std::size_t> Population::find(const std::string& model_id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].model.model_id == model_id) return i;
  return std::nullopt;
}

namespace {

double acceptance(const arch::MultipathModel& m) { return std::ldexp(1.0, -static_cast<int>(m.num_offsprings)); }

}  // namespace

std::optional<std::size_t> select_parent(const Population& population, Rng& rng) {
  for (std::size_t i = 0; i < population.size(); ++i)
    if (rng.bernoulli(acceptance(population[i].model))) return i;
  return std::nullopt;
}

std::vector<double> selection_probabilities(const Population& population) {
  std::vector<double> p;
  double reach = 1.0;
  for (const auto& e : population.entries()) {
    const double a = acceptance(e.model);
    p.push_back(reach * a);
    reach *= 1.0 - a;
  }
  p.push_back(reach);
  return p;
}

std::string resolve_main_path(const store::SystemStore& store, const AgentConfig& config) {
  if (!config.main_path_id.empty()) {
    if (!store.has_path(config.main_path_id)) throw StoreError("unknown main path '" + config.main_path_id + "'");
    return config.main_path_id;
  }
  if (!store.has_task(config.target_task)) throw StoreError("unknown task '" + config.target_task + "'");
  const auto paths = store.paths_for_task(config.target_task);
  if (paths.empty()) throw StoreError("task '" + config.target_task + "' has no published path");
  return paths.front();
}

std::vector<std::string> eligible_support_paths(const store::SystemStore& store, const AgentConfig& config,
                                                const std::string& main_path_id) {
  std::vector<std::string> out;
  for (const auto& id : store.path_ids()) {
    if (id == main_path_id) continue;
    if (std::find(config.support_path_exclusions.begin(), config.support_path_exclusions.end(), id) !=
        config.support_path_exclusions.end())
      continue;
    out.push_back(id);
  }
  return out;
}

arch::MultipathModel random_init_model(const Population& population, const store::SystemStore& store,
                                       const AgentConfig& config, Rng& rng, const std::string& model_id) {
  const std::string main = resolve_main_path(store, config);
  std::vector<std::string> pool = eligible_support_paths(store, config, main);
  const std::size_t wanted = config.default_num_paths - 1;
  std::vector<std::string> supports;
  if (config.forced_first_support) {
    auto it = std::find(pool.begin(), pool.end(), *config.forced_first_support);
    if (it == pool.end()) throw StoreError("forced support path '" + *config.forced_first_support + "' is not eligible");
    supports.push_back(*it);
    pool.erase(it);
  }
  if (pool.size() + supports.size() < wanted)
    throw StoreError("task '" + config.target_task + "' has " + std::to_string(pool.size() + supports.size()) +
                     " eligible support paths, " + std::to_string(wanted) + " needed");
  while (supports.size() < wanted) {
    const std::size_t k = rng.index(pool.size());
    supports.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  train::Hyperparams hp = population.empty() ? train::Hyperparams{} : population[0].model.hyperparams;
  if (config.ablation == AblationMode::unit_lr_multiplier) hp.router_lr_multiplier = 1.0;
  return arch::make_multipath(model_id, store, config.target_task, main, std::move(supports), config.routing(), hp,
                              config.max_paths);
}

namespace {

void rename(arch::MultipathModel& m, const std::string& id) {
  m.model_id = id;
  for (std::size_t i = 0; i < m.connectors.size(); ++i) m.connectors[i].module_id = arch::connector_id(id, i);
  if (m.router) m.router->module_id = arch::router_id(id);
}

struct MutationSite {
  enum Kind { field, add_path, remove_path } kind;
  train::HyperparamField f = train::HyperparamField::learning_rate;
};

void step_field(train::Hyperparams& hp, train::HyperparamField f, Rng& rng) {
  const auto values = train::field_values(f);
  const std::size_t i = train::field_index(hp, f);
  std::vector<std::size_t> neighbors;
  if (i > 0) neighbors.push_back(i - 1);
  if (i + 1 < values.size()) neighbors.push_back(i + 1);
  train::set_field(hp, f, values[neighbors[rng.index(neighbors.size())]]);
}

}  // namespace

arch::MultipathModel mutate(arch::MultipathModel& parent, const store::SystemStore& store, const AgentConfig& config,
                            Rng& rng, const std::string& child_id) {
  arch::MultipathModel child = parent;
  child.score.reset();
  child.parent_id = parent.model_id;
  child.num_offsprings = 0;
  ++parent.num_offsprings;

  std::vector<std::string> unused;
  for (const auto& p : eligible_support_paths(store, config, child.main_path_id))
    if (std::find(child.support_path_ids.begin(), child.support_path_ids.end(), p) == child.support_path_ids.end())
      unused.push_back(p);
  // The forced first support is never removed.
  const std::size_t first_removable = config.forced_first_support ? 1 : 0;

  std::vector<MutationSite> sites;
  for (auto f : train::kAllHyperparamFields) {
    if (f == train::HyperparamField::router_lr_multiplier && config.ablation == AblationMode::unit_lr_multiplier)
      continue;
    sites.push_back({MutationSite::field, f});
  }
  if (child.num_paths() < config.max_paths && !unused.empty()) sites.push_back({MutationSite::add_path});
  if (child.num_paths() > 2 && child.support_path_ids.size() > first_removable)
    sites.push_back({MutationSite::remove_path});

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (rng.bernoulli(config.mutation_probability)) chosen.push_back(i);
  if (chosen.empty()) chosen.push_back(rng.index(sites.size()));

  bool paths_changed = false;
  for (std::size_t i : chosen) {
    const MutationSite& s = sites[i];
    if (s.kind == MutationSite::field) {
      step_field(child.hyperparams, s.f, rng);
    } else if (s.kind == MutationSite::add_path) {
      if (child.num_paths() >= config.max_paths || unused.empty()) continue;
      const std::size_t k = rng.index(unused.size());
      child.support_path_ids.push_back(unused[k]);
      const std::size_t in = store.task(store.path(unused[k]).task_id).num_classes;
      child.connectors.push_back(arch::make_connector("", in, store.task(child.task_id).num_classes));
      child.connectors.back().last_trained_task = child.task_id;
      unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(k));
      paths_changed = true;
    } else {
      if (child.num_paths() <= 2 || child.support_path_ids.size() <= first_removable) continue;
      const std::size_t k = first_removable + rng.index(child.support_path_ids.size() - first_removable);
      child.support_path_ids.erase(child.support_path_ids.begin() + static_cast<std::ptrdiff_t>(k));
      child.connectors.erase(child.connectors.begin() + static_cast<std::ptrdiff_t>(k));
      paths_changed = true;
    }
  }
  rename(child, child_id);
  if (paths_changed) arch::reset_router(child, store);
  arch::validate_model(child, store, config.max_paths);
  return child;
}

std::string genome_key(const arch::MultipathModel& m) {
  std::string key = m.main_path_id;
  for (const auto& p : m.support_path_ids) key += "|" + p;
  return key + "#" + train::describe(m.hyperparams);
}

std::string format_report_row(const CycleReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.cycle << '\t' << r.winner_id << '\t' << r.best_validation << '\t'
     << r.test_accuracy << '\t' << r.population_size << '\t' << r.main_weight << '\t' << r.support_count;
  return os.str();
}

Agent::Agent(AgentConfig config) : config_(std::move(config)), rng_(derive_seed(config_.seed, 0xA6E27)) {
  config_.validate();
}

Agent::Candidate Agent::sample(const store::SystemStore& store, const std::string& model_id) {
  constexpr int kMaxResamples = 10;
  population_.sort();
  const auto parent = select_parent(population_, rng_);
  Candidate c;
  c.creation_index = created_++;
  for (int attempt = 0;; ++attempt) {
    if (parent) {
      auto& entry = population_[*parent];
      c.model = mutate(entry.model, store, config_, rng_, model_id);
      c.parent_score = entry.model.score;
    } else {
      c.model = random_init_model(population_, store, config_, rng_, model_id);
    }
    if (!seen_genomes_.count(genome_key(c.model)) || attempt >= kMaxResamples) break;
    // The discarded attempt does not count as an offspring.
    if (parent) --population_[*parent].model.num_offsprings;
  }
  seen_genomes_.insert(genome_key(c.model));
  return c;
}

CycleReport Agent::run_cycle(store::SystemStore& store, train::TrainContext& ctx) {
  const std::size_t cycle = reports_.size() + 1;
  const std::string prefix = config_.model_prefix.empty() ? config_.target_task : config_.model_prefix;
  std::size_t done = 0;
  while (done < config_.samples_per_cycle) {
    const std::size_t n = std::min(config_.workers, config_.samples_per_cycle - done);
    std::vector<Candidate> batch;
    for (std::size_t i = 0; i < n; ++i)
      batch.push_back(sample(store, prefix + ".c" + std::to_string(cycle) + ".s" + std::to_string(done + i)));
    std::vector<train::ScoreRecord> records(n);
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t i) {
      try {
        records[i] = train::train_and_score(batch[i].model, ctx, config_.budget);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    if (n == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t i = 0; i < n; ++i) threads.emplace_back(work, i);
      for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < n; ++i) {
      train::apply_checkpoint(batch[i].model, records[i]);
      const bool root = !batch[i].parent_score.has_value();
      if (root || *batch[i].model.score > *batch[i].parent_score)
        population_.insert(std::move(batch[i].model), batch[i].creation_index);
    }
    done += n;
  }

  population_.sort();
  if (population_.empty()) throw Error("agent: population is empty after cycle " + std::to_string(cycle));
  const arch::MultipathModel& best = population_[0].model;
  CycleReport r;
  r.cycle = cycle;
  r.winner_id = best.model_id;
  r.best_validation = *best.score;
  r.test_accuracy = train::evaluate(best, ctx, data::Split::test);
  r.population_size = population_.size();
  r.main_weight = train::mean_routing_weights(best, ctx, data::Split::validation)[0];
  r.support_count = best.support_path_ids.size();
  auto [published, modules] = arch::to_published(best);
  published.test_accuracy = r.test_accuracy;
  if (!store.has_model(best.model_id)) {
    store.publish_model(std::move(published), std::move(modules));
  } else if (store::model_to_json(store.model(best.model_id)) != store::model_to_json(published)) {
    throw StoreError("store already holds a different model named '" + best.model_id +
                     "'; use another model prefix");
  }
  reports_.push_back(r);
  return r;
}

void Agent::run(store::SystemStore& store, train::TrainContext& ctx, std::ostream* log) {
  while (reports_.size() < config_.cycles) {
    const CycleReport r = run_cycle(store, ctx);
    if (log) *log << format_report_row(r) << '\n' << std::flush;
  }
}

namespace {

store::Json model_state(const arch::MultipathModel& m) {
  auto [published, modules] = arch::to_published(m);
  store::Json j;
  j["model"] = store::model_to_json(published);
  j["has_score"] = m.score.has_value();
  j["num_offsprings"] = m.num_offsprings;
  j["modules"] = store::Json::array();
  for (const auto& mod : modules) j["modules"].push_back(store::module_to_json(mod));
  return j;
}

arch::MultipathModel model_from_state(const store::Json& j) {
  const store::PublishedModel p = store::model_from_json(j.at("model"));
  std::map<std::string, store::ModuleDef> modules;
  for (const auto& mj : j.at("modules")) {
    store::ModuleDef d = store::module_from_json(mj);
    modules.emplace(d.module_id, std::move(d));
  }
  arch::MultipathModel m;
  m.model_id = p.model_id;
  m.task_id = p.task_id;
  m.main_path_id = p.main_path_id;
  m.support_path_ids = p.support_path_ids;
  for (const auto& id : p.connector_ids) m.connectors.push_back(modules.at(id));
  if (p.router_id) m.router = modules.at(*p.router_id);
  m.routing = {p.aggregation, p.w_main_star, p.zero_bias_init};
  m.ema = p.ema;
  m.hyperparams = p.hyperparams;
  if (j.at("has_score").get<bool>()) m.score = p.validation_score;
  m.parent_id = p.parent_id;
  m.num_offsprings = j.at("num_offsprings").get<std::size_t>();
  return m;
}

}  // namespace

store::Json Agent::save_state() const {
  store::Json j;
  j["format"] = "mpath-agent";
  j["version"] = 1;
  j["config"] = config_to_json(config_);
  j["rng"] = rng_.serialize();
  j["created"] = created_;
  j["seen_genomes"] = seen_genomes_;
  j["population"] = store::Json::array();
  for (const auto& e : population_.entries()) {
    store::Json ej = model_state(e.model);
    ej["creation_index"] = e.creation_index;
    j["population"].push_back(std::move(ej));
  }
  j["reports"] = store::Json::array();
  for (const auto& r : reports_)
    j["reports"].push_back({{"cycle", r.cycle},
                            {"winner_id", r.winner_id},
                            {"best_validation", r.best_validation},
                            {"test_accuracy", r.test_accuracy},
                            {"population_size", r.population_size},
                            {"main_weight", r.main_weight},
                            {"support_count", r.support_count}});
  return j;
}

Agent Agent::load_state(const store::Json& j) {
  try {
    if (j.at("format") != "mpath-agent" || j.at("version") != 1) throw FormatError("agent state: unsupported format");
    Agent a(config_from_json(j.at("config")));
    a.rng_.deserialize(j.at("rng").get<std::string>());
    a.created_ = j.at("created").get<std::size_t>();
    a.seen_genomes_ = j.at("seen_genomes").get<std::set<std::string>>();
    for (const auto& ej : j.at("population"))
      a.population_.insert(model_from_state(ej), ej.at("creation_index").get<std::size_t>());
    for (const auto& rj : j.at("reports")) {
      CycleReport r;
      r.cycle = rj.at("cycle");
      r.winner_id = rj.at("winner_id");
      r.best_validation = rj.at("best_validation");
      r.test_accuracy = rj.at("test_accuracy");
      r.population_size = rj.at("population_size");
      r.main_weight = rj.at("main_weight");
      r.support_count = rj.at("support_count");
      a.reports_.push_back(std::move(r));
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("agent state: ") + e.what());
  }
}

}  // namespace mpath::evo

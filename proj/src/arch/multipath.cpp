#include "mpath/arch/multipath.hpp"

#include <algorithm>
#include <set>

#include "mpath/arch/router.hpp"
#include "mpath/errors.hpp"
#include "mpath/store/forward.hpp"

namespace mpath::arch {

std::vector<std::string> MultipathModel::path_ids() const {
  std::vector<std::string> ids{main_path_id};
  ids.insert(ids.end(), support_path_ids.begin(), support_path_ids.end());
  return ids;
}

std::string connector_id(const std::string& model_id, std::size_t index) {
  return model_id + ".conn" + std::to_string(index);
}

std::string router_id(const std::string& model_id) { return model_id + ".router"; }

store::ModuleDef make_connector(std::string id, std::size_t in, std::size_t out) {
  return store::make_zero_module(std::move(id), store::ModuleKind::connector, in, out);
}

namespace {

std::size_t logit_dim(const store::SystemStore& store, const std::string& path_id) {
  return store.task(store.path(path_id).task_id).num_classes;
}

}  // namespace

MultipathModel make_multipath(std::string model_id, const store::SystemStore& store, const std::string& task_id,
                              const std::string& main_path_id, std::vector<std::string> support_path_ids,
                              const RouterOptions& routing, train::Hyperparams hyperparams, std::size_t max_paths) {
  MultipathModel m;
  m.model_id = std::move(model_id);
  m.task_id = task_id;
  m.main_path_id = main_path_id;
  m.support_path_ids = std::move(support_path_ids);
  m.routing = routing;
  m.hyperparams = std::move(hyperparams);
  if (m.num_paths() < 2) throw ValueError("multipath model " + m.model_id + " needs at least one support path");
  if (!store.has_task(task_id)) throw ValueError("unknown task '" + task_id + "'");
  const std::size_t c = store.task(task_id).num_classes;
  for (std::size_t i = 0; i < m.support_path_ids.size(); ++i) {
    if (!store.has_path(m.support_path_ids[i]))
      throw ValueError("unknown support path '" + m.support_path_ids[i] + "'");
    m.connectors.push_back(
        make_connector(connector_id(m.model_id, i), logit_dim(store, m.support_path_ids[i]), c));
    m.connectors.back().last_trained_task = task_id;
  }
  reset_router(m, store);
  validate_model(m, store, max_paths);
  return m;
}

void validate_model(const MultipathModel& m, const store::SystemStore& store, std::size_t max_paths) {
  const std::string who = "multipath model " + m.model_id;
  if (m.num_paths() < 2 || m.num_paths() > max_paths)
    throw ValueError(who + ": path count " + std::to_string(m.num_paths()) + " outside [2, " +
                     std::to_string(max_paths) + "]");
  if (!store.has_path(m.main_path_id)) throw ValueError(who + ": unknown main path " + m.main_path_id);
  if (store.path(m.main_path_id).task_id != m.task_id)
    throw ValueError(who + ": main path " + m.main_path_id + " does not solve task " + m.task_id);
  std::set<std::string> seen{m.main_path_id};
  for (const auto& p : m.support_path_ids) {
    if (!store.has_path(p)) throw ValueError(who + ": unknown support path " + p);
    if (!seen.insert(p).second) throw ValueError(who + ": path " + p + " used twice");
  }
  if (m.connectors.size() != m.support_path_ids.size()) throw ValueError(who + ": connector count mismatch");
  const std::size_t c = store.task(m.task_id).num_classes;
  for (std::size_t i = 0; i < m.connectors.size(); ++i) {
    const auto& conn = m.connectors[i];
    if (conn.kind != store::ModuleKind::connector || conn.in_dim() != logit_dim(store, m.support_path_ids[i]) ||
        conn.out_dim() != c)
      throw ValueError(who + ": connector " + conn.module_id + " has the wrong kind or shape");
  }
  if (uses_router(m.routing.aggregation)) {
    if (!m.router) throw ValueError(who + ": router missing");
    if (m.router->kind != store::ModuleKind::router || m.router->in_dim() != c || m.router->out_dim() != m.num_paths())
      throw ValueError(who + ": router has the wrong kind or shape");
  } else if (m.router) {
    throw ValueError(who + ": sum aggregation has no router");
  }
  if (m.routing.aggregation == AggregationMode::ema_decoupled && m.ema.size() != m.num_paths())
    throw ValueError(who + ": EMA state size mismatch");
}

void reset_router(MultipathModel& m, const store::SystemStore& store) {
  m.ema.clear();
  if (!uses_router(m.routing.aggregation)) {
    m.router.reset();
    return;
  }
  const std::size_t c = store.task(m.task_id).num_classes;
  store::ModuleDef r = store::make_zero_module(router_id(m.model_id), store::ModuleKind::router, c, m.num_paths());
  if (!m.routing.zero_bias_init) r.bias = init_router_bias(m.routing.w_main_star, m.num_paths());
  r.last_trained_task = m.task_id;
  m.router = std::move(r);
  m.ema = prior_weights(m);
}

void update_ema(std::vector<double>& ema, const ad::Tensor& weights, double decay) {
  if (weights.rank() != 2 || weights.cols() != ema.size())
    throw DimensionError("update_ema: weights " + ad::shape_string(weights.shape()) + " do not match the EMA state");
  for (std::size_t p = 0; p < ema.size(); ++p) {
    double mean = 0.0;
    for (std::size_t r = 0; r < weights.rows(); ++r) mean += weights.at(r, p);
    mean /= static_cast<double>(weights.rows());
    ema[p] = decay * ema[p] + (1.0 - decay) * mean;
  }
}

std::vector<double> prior_weights(const MultipathModel& m) {
  if (!m.router) return std::vector<double>(m.num_paths(), 1.0);
  const ad::Tensor w = ad::softmax_rows(m.router->bias.reshaped({1, m.num_paths()}));
  return w.values();
}

PathInputs gather_inputs(store::RepresentationCache& cache, const MultipathModel& m, data::Split split,
                         std::span<const std::size_t> indices) {
  PathInputs in;
  in.main = cache.get_rows(m.main_path_id, m.task_id, split, indices);
  for (const auto& p : m.support_path_ids) in.support.push_back(cache.get_rows(p, m.task_id, split, indices));
  return in;
}

PathInputs compute_inputs(const store::SystemStore& store, const MultipathModel& m,
                          std::span<const data::Image* const> images) {
  auto run = [&](const std::string& path_id) {
    const store::PathSpec& p = store.path(path_id);
    return store::path_forward(store, path_id, store::images_to_batch(images, p.input_resolution, p.channels));
  };
  PathInputs in;
  in.main = run(m.main_path_id);
  for (const auto& p : m.support_path_ids) in.support.push_back(run(p));
  return in;
}

MultipathForward assemble_and_forward(ad::Tape& tape, const MultipathModel& m, const PathInputs& inputs) {
  if (inputs.support.size() != m.support_path_ids.size())
    throw ValueError("multipath model " + m.model_id + ": inputs do not match its paths");
  MultipathForward out;
  const ad::Var main = tape.constant(inputs.main);
  std::vector<ad::Var> reps{main};
  for (std::size_t i = 0; i < m.connectors.size(); ++i) {
    out.connectors.push_back(store::bind_module(tape, m.connectors[i]));
    reps.push_back(store::apply_module(m.connectors[i], out.connectors.back(), tape.constant(inputs.support[i])));
  }
  ad::Var weights;
  if (m.router) {
    out.router = store::bind_module(tape, *m.router);
    weights = route(*m.router, *out.router, main, m.hyperparams.router_lr_multiplier);
    out.weights = weights;
  }
  out.logits = aggregate(reps, weights, m.routing.aggregation, m.ema);
  return out;
}

ad::Tensor multipath_logits(const MultipathModel& m, const PathInputs& inputs) {
  ad::Tape tape;
  return assemble_and_forward(tape, m, inputs).logits.value();
}

std::pair<store::PublishedModel, std::vector<store::ModuleDef>> to_published(const MultipathModel& m) {
  store::PublishedModel p;
  p.model_id = m.model_id;
  p.task_id = m.task_id;
  p.main_path_id = m.main_path_id;
  p.support_path_ids = m.support_path_ids;
  std::vector<store::ModuleDef> modules;
  for (const auto& c : m.connectors) {
    p.connector_ids.push_back(c.module_id);
    modules.push_back(c);
  }
  if (m.router) {
    p.router_id = m.router->module_id;
    modules.push_back(*m.router);
  }
  p.aggregation = m.routing.aggregation;
  p.w_main_star = m.routing.w_main_star;
  p.zero_bias_init = m.routing.zero_bias_init;
  p.ema = m.ema;
  p.hyperparams = m.hyperparams;
  p.validation_score = m.score.value_or(0.0);
  p.parent_id = m.parent_id;
  return {std::move(p), std::move(modules)};
}

MultipathModel from_published(const store::SystemStore& store, const std::string& model_id) {
  const store::PublishedModel& p = store.model(model_id);
  MultipathModel m;
  m.model_id = p.model_id;
  m.task_id = p.task_id;
  m.main_path_id = p.main_path_id;
  m.support_path_ids = p.support_path_ids;
  for (const auto& id : p.connector_ids) m.connectors.push_back(store.module(id));
  if (p.router_id) m.router = store.module(*p.router_id);
  m.routing = {p.aggregation, p.w_main_star, p.zero_bias_init};
  m.ema = p.ema;
  m.hyperparams = p.hyperparams;
  m.score = p.validation_score;
  m.parent_id = p.parent_id;
  return m;
}

}  // namespace mpath::arch

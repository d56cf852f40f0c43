#include "mpath/train/seed.hpp"

#include <algorithm>
#include <numeric>

#include "mpath/autodiff/ops.hpp"
#include "mpath/errors.hpp"
#include "mpath/store/forward.hpp"
#include "mpath/train/trainer.hpp"

namespace mpath::train {

namespace {

ad::Tensor make_input(const data::SplitData& split, std::span<const std::size_t> idx, const PathTrainSpec& spec,
                      Rng& rng, bool augment) {
  std::vector<data::Image> processed;
  std::vector<const data::Image*> ptrs;
  processed.reserve(idx.size());
  for (std::size_t i : idx) {
    if (augment)
      processed.push_back(data::preprocess(split.images[i], spec.preprocess, rng, true));
    else
      ptrs.push_back(&split.images[i]);
  }
  if (augment)
    for (const auto& im : processed) ptrs.push_back(&im);
  return store::images_to_batch(ptrs, spec.resolution, spec.channels);
}

}  // namespace

double train_chain(std::vector<store::ModuleDef>& modules, const data::SplitData& train, const PathTrainSpec& spec,
                   Rng& rng) {
  if (modules.empty()) throw ValueError("train_chain: no modules");
  const bool augment = !(spec.preprocess == data::PreprocessConfig{});
  Optimizer optimizer;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<std::size_t> batch(std::min(spec.batch_size, train.size()));
  std::vector<int> labels(batch.size());
  double tail_loss = 0.0;
  std::size_t tail_count = 0;
  const std::size_t tail_start = spec.steps - spec.steps / 10;

  for (std::size_t step = 0; step < spec.steps; ++step) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch[i] = order[cursor++];
      labels[i] = train.labels[batch[i]];
    }
    ad::Tape tape;
    ad::Var h = tape.constant(make_input(train, batch, spec, rng, augment));
    std::vector<store::ModuleVars> vars;
    for (const auto& m : modules) {
      vars.push_back(store::bind_module(tape, m));
      h = store::apply_module(m, vars.back(), h);
    }
    const ad::Var loss = ad::cross_entropy(h, labels);
    if (!loss.value().all_finite()) throw Error("seed training diverged at step " + std::to_string(step));
    if (step >= tail_start) {
      tail_loss += loss.value().item();
      ++tail_count;
    }
    const ad::Gradients g = tape.backward(loss);
    SgdConfig cfg = spec.sgd;
    cfg.learning_rate = lr_schedule(step, spec.steps, spec.sgd.learning_rate, spec.warmup_ratio);
    for (std::size_t k = 0; k < modules.size(); ++k)
      if (!modules[k].frozen) optimizer.apply(modules[k], g.of(vars[k].kernel), g.of(vars[k].bias), cfg);
  }
  return tail_count ? tail_loss / static_cast<double>(tail_count) : 0.0;
}

ad::Tensor chain_logits(const std::vector<store::ModuleDef>& modules, const data::SplitData& split,
                        std::size_t resolution, std::size_t channels) {
  std::vector<const data::Image*> ptrs;
  for (const auto& im : split.images) ptrs.push_back(&im);
  ad::Tensor h = store::images_to_batch(ptrs, resolution, channels);
  for (const auto& m : modules) h = store::module_forward(m, h);
  return h;
}

std::vector<SeededPath> seed_store(store::SystemStore& store, store::DatasetRegistry& datasets,
                                   const SeedConfig& config, const std::vector<std::string>& task_ids) {
  if (std::find(task_ids.begin(), task_ids.end(), config.base_task) == task_ids.end())
    throw ValueError("base task '" + config.base_task + "' is not among the seeded tasks");
  for (const auto& t : task_ids)
    if (!store.paths_for_task(t).empty()) throw StoreError("task '" + t + "' already has a published path");
  config.preprocess.validate();

  const data::TaskSpec& base = store.task(config.base_task);
  PathTrainSpec spec;
  spec.resolution = base.resolution;
  spec.channels = base.channels;
  spec.batch_size = config.batch_size;
  spec.sgd = {config.learning_rate, config.momentum, config.nesterov};
  spec.warmup_ratio = config.warmup_ratio;
  spec.preprocess = config.preprocess;

  std::vector<std::string> order{config.base_task};
  for (const auto& t : task_ids)
    if (t != config.base_task) order.push_back(t);

  std::vector<store::ModuleDef> trunk;
  std::vector<SeededPath> out;
  for (const auto& task_id : order) {
    const data::TaskSpec& task = store.task(task_id);
    const auto ds = datasets.get(task);
    Rng rng(derive_seed(config.seed, hash_string("seed:" + task_id)));
    std::vector<store::ModuleDef> chain;
    const bool is_base = task_id == config.base_task;
    if (is_base) {
      std::size_t width = base.resolution * base.resolution * base.channels;
      for (std::size_t k = 0; k < config.hidden.size(); ++k) {
        chain.push_back(store::make_random_module(task_id + ".trunk" + std::to_string(k), store::ModuleKind::dense,
                                                  width, config.hidden[k], rng));
        width = config.hidden[k];
      }
    } else {
      for (const auto& t : trunk) {
        store::ModuleDef clone = t;
        clone.module_id = task_id + t.module_id.substr(config.base_task.size());
        clone.parent_module_id = t.module_id;
        clone.frozen = false;
        chain.push_back(std::move(clone));
      }
    }
    const std::size_t width = config.hidden.empty() ? base.resolution * base.resolution * base.channels
                                                    : config.hidden.back();
    chain.push_back(store::make_random_module(task_id + ".head", store::ModuleKind::head, width, task.num_classes, rng));

    spec.steps = is_base ? config.base_steps : config.finetune_steps;
    if (spec.steps > 0) train_chain(chain, ds->train, spec, rng);
    for (auto& m : chain) m.last_trained_task = task_id;
    if (is_base) trunk.assign(chain.begin(), chain.end() - 1);

    SeededPath rec{task_id, seeded_path_id(task_id), 0.0, 0.0};
    rec.validation_accuracy =
        accuracy(chain_logits(chain, ds->validation, spec.resolution, spec.channels), ds->validation.labels);
    rec.test_accuracy = accuracy(chain_logits(chain, ds->test, spec.resolution, spec.channels), ds->test.labels);
    store::PathSpec path{rec.path_id, task_id, {}, spec.resolution, spec.channels};
    for (const auto& m : chain) path.module_ids.push_back(m.module_id);
    store.publish_path(std::move(path), std::move(chain));
    out.push_back(rec);
  }
  return out;
}

}  // namespace mpath::train

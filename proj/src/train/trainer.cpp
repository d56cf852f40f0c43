#include "mpath/train/trainer.hpp"

#include <cmath>
#include <numeric>

#include "mpath/arch/router.hpp"
#include "mpath/autodiff/ops.hpp"
#include "mpath/errors.hpp"
#include "mpath/rng.hpp"
#include "mpath/train/optim.hpp"

namespace mpath::train {

namespace {

constexpr std::size_t kEvalBatch = 256;

const data::SplitData& split_of(TrainContext& ctx, const std::string& task_id, data::Split split) {
  return ctx.datasets.get(ctx.store.task(task_id))->split(split);
}

std::vector<std::size_t> iota(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

void snapshot(ScoreRecord& r, const arch::MultipathModel& m) {
  r.best_connectors = m.connectors;
  r.best_router = m.router;
  r.best_ema = m.ema;
}

}  // namespace

void apply_checkpoint(arch::MultipathModel& model, const ScoreRecord& record) {
  model.connectors = record.best_connectors;
  model.router = record.best_router;
  model.ema = record.best_ema;
  model.score = record.score;
}

std::size_t argmax_row(const ad::Tensor& logits, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.cols(); ++c)
    if (logits.at(row, c) > logits.at(row, best)) best = c;
  return best;
}

double accuracy(const ad::Tensor& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) throw DimensionError("accuracy: logits and labels differ in length");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r)
    if (static_cast<int>(argmax_row(logits, r)) == labels[r]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const arch::MultipathModel& model, TrainContext& ctx, data::Split split) {
  const data::SplitData& samples = split_of(ctx, model.task_id, split);
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalBatch) {
    const auto idx = iota(begin, std::min(samples.size(), begin + kEvalBatch));
    const ad::Tensor logits = arch::multipath_logits(model, arch::gather_inputs(ctx.cache, model, split, idx));
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (static_cast<int>(argmax_row(logits, r)) == samples.labels[idx[r]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double evaluate_path(const std::string& path_id, const std::string& task_id, TrainContext& ctx, data::Split split) {
  const data::SplitData& samples = split_of(ctx, task_id, split);
  if (ctx.store.task(ctx.store.path(path_id).task_id).num_classes != ctx.store.task(task_id).num_classes)
    throw ValueError("path " + path_id + " does not produce logits for task " + task_id);
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalBatch) {
    const auto idx = iota(begin, std::min(samples.size(), begin + kEvalBatch));
    const ad::Tensor logits = ctx.cache.get_rows(path_id, task_id, split, idx);
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (static_cast<int>(argmax_row(logits, r)) == samples.labels[idx[r]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::vector<double> mean_routing_weights(const arch::MultipathModel& model, TrainContext& ctx, data::Split split) {
  std::vector<double> mean(model.num_paths(), 0.0);
  if (!model.router) {
    std::fill(mean.begin(), mean.end(), 1.0);
    return mean;
  }
  const data::SplitData& samples = split_of(ctx, model.task_id, split);
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalBatch) {
    const auto idx = iota(begin, std::min(samples.size(), begin + kEvalBatch));
    ad::Tape tape;
    const ad::Var main = tape.constant(ctx.cache.get_rows(model.main_path_id, model.task_id, split, idx));
    const ad::Var w = arch::route(*model.router, store::bind_constant(tape, *model.router), main, 1.0);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += w.value().at(r, p);
  }
  for (double& v : mean) v /= static_cast<double>(samples.size());
  return mean;
}

ScoreRecord train_and_score(const arch::MultipathModel& model, TrainContext& ctx, const TrainBudget& budget,
                            std::ostream* log) {
  if (!ctx.store.has_task(model.task_id)) throw StoreError("unknown task '" + model.task_id + "'");
  if (budget.batch_size == 0) throw ValueError("batch size must be positive");
  arch::MultipathModel m = model;
  for (auto& c : m.connectors) c.frozen = false;
  if (m.router) m.router->frozen = false;

  const data::SplitData& train = split_of(ctx, m.task_id, data::Split::train);
  const std::size_t total = budget.train_steps;
  Rng rng(derive_seed(ctx.seed, hash_string(m.model_id)));
  Optimizer optimizer;

  ScoreRecord record;
  for (std::size_t k = 1; k <= kNumEvaluations; ++k) record.eval_steps.push_back(k * total / kNumEvaluations);
  snapshot(record, m);
  double best = -1.0;
  auto evaluate_now = [&]() {
    const double acc = evaluate(m, ctx, data::Split::validation);
    record.eval_accuracies.push_back(acc);
    if (acc > best) {
      best = acc;
      record.best_eval_index = record.eval_accuracies.size() - 1;
      snapshot(record, m);
    }
  };

  std::vector<std::size_t> order = iota(0, train.size());
  std::size_t cursor = order.size();
  std::vector<std::size_t> batch(std::min(budget.batch_size, train.size()));
  std::vector<int> labels(batch.size());
  const SgdConfig base{m.hyperparams.learning_rate, m.hyperparams.momentum, m.hyperparams.nesterov};

  std::size_t next_eval = 0;
  while (next_eval < kNumEvaluations && record.eval_steps[next_eval] == 0) {
    evaluate_now();
    ++next_eval;
  }
  for (std::size_t step = 0; step < total; ++step) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch[i] = order[cursor++];
      labels[i] = train.labels[batch[i]];
    }
    const arch::PathInputs inputs = arch::gather_inputs(ctx.cache, m, data::Split::train, batch);
    ad::Tape tape;
    const arch::MultipathForward fwd = arch::assemble_and_forward(tape, m, inputs);
    const ad::Var loss = ad::cross_entropy(fwd.logits, labels);
    const double loss_value = loss.value().item();
    if (!std::isfinite(loss_value)) {
      record.diverged = true;
      record.diagnostic = "non-finite loss at step " + std::to_string(step);
      break;
    }
    const ad::Gradients grads = tape.backward(loss);
    SgdConfig cfg = base;
    cfg.learning_rate = lr_schedule(step, total, base.learning_rate, m.hyperparams.warmup_ratio);
    for (std::size_t i = 0; i < m.connectors.size(); ++i)
      optimizer.apply(m.connectors[i], grads.of(fwd.connectors[i].kernel), grads.of(fwd.connectors[i].bias), cfg);
    if (m.router) {
      optimizer.apply(*m.router, grads.of(fwd.router->kernel), grads.of(fwd.router->bias), cfg);
      arch::update_ema(m.ema, fwd.weights->value());
    }
    if (log) *log << m.model_id << '\t' << step << '\t' << loss_value << '\t' << cfg.learning_rate << '\n';
    while (next_eval < kNumEvaluations && record.eval_steps[next_eval] == step + 1) {
      evaluate_now();
      ++next_eval;
    }
  }

  for (const auto& [key, v] : optimizer.state()) record.trained_parameters.push_back(key);
  if (record.diverged) {
    record.score = 0.0;
    record.eval_accuracies.resize(kNumEvaluations, 0.0);
    return record;
  }
  record.score = best;
  return record;
}

}  // namespace mpath::train

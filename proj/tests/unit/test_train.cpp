#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "mpath/arch/multipath.hpp"
#include "mpath/errors.hpp"
#include "mpath/train/hyperparams.hpp"
#include "mpath/train/optim.hpp"
#include "mpath/train/seed.hpp"
#include "mpath/train/trainer.hpp"

namespace {

using namespace mpath;
using mpath::testing::publish_simple_path;
using mpath::testing::small_task;

TEST(LrSchedule, NoWarmupStartsAtPeak) { EXPECT_DOUBLE_EQ(train::lr_schedule(0, 100, 0.3, 0.0), 0.3); }

TEST(LrSchedule, LinearRamp) {
  EXPECT_NEAR(train::lr_schedule(5, 100, 0.2, 0.1), 0.1, 1e-15);
  EXPECT_EQ(train::lr_schedule(0, 100, 0.2, 0.1), 0.0);
  EXPECT_NEAR(train::lr_schedule(10, 100, 0.2, 0.1), 0.2, 1e-15);
}

TEST(LrSchedule, CosineEndpointNearZero) {
  const double last = train::lr_schedule(999, 1000, 1.0, 0.02);
  EXPECT_GE(last, 0.0);
  EXPECT_LT(last, 1e-4);
  // 12 warmup steps, then the decay midpoint lands on step 66.
  EXPECT_NEAR(train::lr_schedule(66, 120, 1.0, 0.1), 0.5, 1e-12);
}

TEST(LrSchedule, RejectsBadArguments) {
  EXPECT_THROW(train::lr_schedule(0, 100, 0.1, 0.15), ValueError);
  EXPECT_THROW(train::lr_schedule(100, 100, 0.1, 0.0), ValueError);
}

TEST(Sgd, PlainStep) {
  ad::Tensor p({3}, {1.0, 2.0, 3.0});
  ad::Tensor v = ad::Tensor::zeros_like(p);
  train::sgd_step(p, ad::Tensor({3}, {0.5, -1.0, 2.0}), v, {0.1, 0.0, false});
  EXPECT_NEAR(p[0], 0.95, 1e-15);
  EXPECT_NEAR(p[1], 2.1, 1e-15);
  EXPECT_NEAR(p[2], 2.8, 1e-15);
}

TEST(Sgd, MomentumRecursion) {
  ad::Tensor p({1}, 0.0);
  ad::Tensor v = ad::Tensor::zeros_like(p);
  const ad::Tensor g({1}, 1.0);
  train::sgd_step(p, g, v, {1.0, 0.9, false});
  EXPECT_NEAR(p[0], -1.0, 1e-15);
  train::sgd_step(p, g, v, {1.0, 0.9, false});
  EXPECT_NEAR(p[0], -2.9, 1e-15);
}

TEST(Sgd, NesterovDiffersFromFirstStep) {
  ad::Tensor a({1}, 0.0), b({1}, 0.0);
  ad::Tensor va = ad::Tensor::zeros_like(a), vb = ad::Tensor::zeros_like(b);
  const ad::Tensor g({1}, 1.0);
  train::sgd_step(a, g, va, {1.0, 0.9, false});
  train::sgd_step(b, g, vb, {1.0, 0.9, true});
  EXPECT_NEAR(a[0], -1.0, 1e-15);
  EXPECT_NEAR(b[0], -1.9, 1e-15);
}

TEST(Optimizer, RefusesFrozenModules) {
  Rng rng(1);
  auto m = store::make_random_module("d", store::ModuleKind::dense, 3, 2, rng);
  m.frozen = true;
  const store::ModuleDef before = m;
  train::Optimizer opt;
  EXPECT_THROW(opt.apply(m, ad::Tensor({3, 2}, 1.0), ad::Tensor({2}, 1.0), {0.1, 0.9, true}), ContractViolation);
  EXPECT_EQ(m.kernel, before.kernel);
  EXPECT_TRUE(opt.state().empty());
}

TEST(Optimizer, StateKeyedByModule) {
  Rng rng(1);
  auto m = store::make_random_module("conn", store::ModuleKind::connector, 3, 2, rng);
  train::Optimizer opt;
  opt.apply(m, ad::Tensor({3, 2}, 1.0), ad::Tensor({2}, 1.0), {0.1, 0.9, true});
  ASSERT_EQ(opt.state().size(), 2u);
  EXPECT_TRUE(opt.state().count("conn.kernel"));
  EXPECT_TRUE(opt.state().count("conn.bias"));
}

TEST(Accuracy, PerfectLogits) {
  const std::vector<int> labels{2, 0, 1, 1};
  ad::Tensor logits({4, 3}, 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) logits.at(r, labels[r]) = 5.0;
  EXPECT_EQ(train::accuracy(logits, labels), 1.0);
}

TEST(Accuracy, UniformLogitsTieToLowestIndex) {
  const std::vector<int> labels{0, 1, 2, 3, 0, 1, 2, 3};
  const ad::Tensor logits({8, 4}, 0.25);
  for (std::size_t r = 0; r < labels.size(); ++r) EXPECT_EQ(train::argmax_row(logits, r), 0u);
  EXPECT_EQ(train::accuracy(logits, labels), 0.25);
}

TEST(Hyperparams, DefaultsAreAdmissible) {
  const train::Hyperparams hp;
  EXPECT_NO_THROW(hp.validate());
  EXPECT_EQ(hp.learning_rate, 0.02);
  EXPECT_EQ(hp.warmup_ratio, 0.02);
  EXPECT_EQ(hp.momentum, 0.8);
  EXPECT_TRUE(hp.nesterov);
  EXPECT_EQ(hp.router_lr_multiplier, 0.05);
  EXPECT_EQ(hp.preprocess.cropped_area_range_min, 1.0);
  EXPECT_FALSE(hp.preprocess.flip_left_right);
}

TEST(Hyperparams, FieldAccessRoundTrip) {
  for (auto f : train::kAllHyperparamFields) {
    EXPECT_EQ(train::parse_field(train::field_name(f)), f);
    train::Hyperparams hp;
    for (double v : train::field_values(f)) {
      train::set_field(hp, f, v);
      EXPECT_EQ(train::get_field(hp, f), v);
      EXPECT_NO_THROW(hp.validate());
    }
  }
}

TEST(Hyperparams, RejectsValuesOutsideLists) {
  train::Hyperparams hp;
  hp.learning_rate = 0.03;
  EXPECT_THROW(hp.validate(), ValueError);
  EXPECT_THROW(train::field_index(hp, train::HyperparamField::learning_rate), ValueError);
  EXPECT_THROW(train::parse_field("dropout"), ValueError);
}

class TrainerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_.register_task(small_task("t", 1, 4, 8, {96, 64, 64}, {0, 1}));
    store_.register_task(small_task("a", 2, 4, 8, {96, 64, 64}, {2}));
    Rng rng(5);
    publish_simple_path(store_, "pT", "t", "trunkT", 12, rng);
    publish_simple_path(store_, "pA", "a", "trunkA", 12, rng);
  }

  arch::MultipathModel model(const std::string& id, train::Hyperparams hp = {}) {
    hp.learning_rate = 0.1;
    return arch::make_multipath(id, store_, "t", "pT", {"pA"}, {}, hp);
  }

  train::TrainContext ctx() { return {store_, cache_, datasets_, 42}; }

  store::SystemStore store_;
  store::DatasetRegistry datasets_;
  store::RepresentationCache cache_{store_, datasets_};
};

TEST_F(TrainerTest, FreshModelMatchesMainPath) {
  auto c = ctx();
  const auto m = model("m");
  EXPECT_EQ(train::evaluate(m, c, data::Split::validation),
            train::evaluate_path("pT", "t", c, data::Split::validation));
  EXPECT_EQ(train::evaluate(m, c, data::Split::test), train::evaluate_path("pT", "t", c, data::Split::test));
}

TEST_F(TrainerTest, ZeroBudgetScoresMainPath) {
  auto c = ctx();
  const auto rec = train::train_and_score(model("m"), c, {0, 16});
  ASSERT_EQ(rec.eval_accuracies.size(), train::kNumEvaluations);
  EXPECT_EQ(rec.score, train::evaluate_path("pT", "t", c, data::Split::validation));
  EXPECT_EQ(rec.best_eval_index, 0u);
}

TEST_F(TrainerTest, FourEvenlySpacedEvaluations) {
  auto c = ctx();
  const auto rec = train::train_and_score(model("m"), c, {100, 16});
  EXPECT_EQ(rec.eval_steps, (std::vector<std::size_t>{25, 50, 75, 100}));
  ASSERT_EQ(rec.eval_accuracies.size(), 4u);
  double best = rec.eval_accuracies[0];
  for (double a : rec.eval_accuracies) best = std::max(best, a);
  EXPECT_EQ(rec.score, best);
  EXPECT_EQ(rec.eval_accuracies[rec.best_eval_index], best);
  for (std::size_t i = 0; i < rec.best_eval_index; ++i) EXPECT_LT(rec.eval_accuracies[i], best);
}

TEST_F(TrainerTest, RetainedCheckpointReproducesScore) {
  auto c = ctx();
  auto m = model("m");
  const auto rec = train::train_and_score(m, c, {100, 16});
  train::apply_checkpoint(m, rec);
  EXPECT_EQ(train::evaluate(m, c, data::Split::validation), rec.score);
  EXPECT_EQ(*m.score, rec.score);
}

TEST_F(TrainerTest, Deterministic) {
  auto c = ctx();
  const auto m = model("m");
  const auto r1 = train::train_and_score(m, c, {60, 16});
  const auto r2 = train::train_and_score(m, c, {60, 16});
  EXPECT_EQ(r1.eval_accuracies, r2.eval_accuracies);
  ASSERT_EQ(r1.best_connectors.size(), r2.best_connectors.size());
  EXPECT_EQ(r1.best_connectors[0].kernel, r2.best_connectors[0].kernel);
  EXPECT_EQ(r1.best_router->kernel, r2.best_router->kernel);
  EXPECT_EQ(r1.best_ema, r2.best_ema);
}

TEST_F(TrainerTest, NothingTrainsWithZeroRates) {
  auto c = ctx();
  auto m = model("m");
  m.hyperparams.learning_rate = 0.0;
  m.hyperparams.router_lr_multiplier = 0.0;
  const double before = train::evaluate(m, c, data::Split::validation);
  const auto rec = train::train_and_score(m, c, {40, 16});
  EXPECT_EQ(rec.score, before);
  for (double a : rec.eval_accuracies) EXPECT_EQ(a, before);
  auto trained = m;
  train::apply_checkpoint(trained, rec);
  EXPECT_EQ(trained.connectors[0].kernel, m.connectors[0].kernel);
  EXPECT_EQ(trained.router->kernel, m.router->kernel);
  EXPECT_EQ(trained.router->bias, m.router->bias);
}

TEST_F(TrainerTest, FrozenPathsUnchanged) {
  std::vector<store::ModuleDef> before;
  for (const auto& id : store_.module_ids()) before.push_back(store_.module(id));
  auto c = ctx();
  train::train_and_score(model("m"), c, {80, 16});
  for (const auto& m : before) {
    const auto& after = store_.module(m.module_id);
    EXPECT_EQ(after.kernel, m.kernel) << m.module_id;
    EXPECT_EQ(after.bias, m.bias) << m.module_id;
    EXPECT_TRUE(after.frozen);
  }
}

TEST_F(TrainerTest, DivergenceScoresZero) {
  auto c = ctx();
  auto m = model("m");
  m.connectors[0].kernel[0] = std::nan("");
  const auto rec = train::train_and_score(m, c, {40, 16});
  EXPECT_TRUE(rec.diverged);
  EXPECT_EQ(rec.score, 0.0);
  EXPECT_FALSE(rec.diagnostic.empty());
  EXPECT_EQ(rec.eval_accuracies.size(), train::kNumEvaluations);
}

TEST_F(TrainerTest, WritesOneLogLinePerStep) {
  auto c = ctx();
  std::ostringstream log;
  train::train_and_score(model("m"), c, {30, 16}, &log);
  std::istringstream in(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 3) << line;
    EXPECT_EQ(line.rfind("m\t", 0), 0u);
    ++n;
  }
  EXPECT_EQ(n, 30u);
}

TEST_F(TrainerTest, UnknownTaskFails) {
  auto c = ctx();
  auto m = model("m");
  m.task_id = "missing";
  EXPECT_THROW(train::train_and_score(m, c, {10, 16}), StoreError);
}

TEST_F(TrainerTest, RoutingWeightsStartAtPrior) {
  auto c = ctx();
  const auto w = train::mean_routing_weights(model("m"), c, data::Split::validation);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], 0.8, 1e-12);
  EXPECT_NEAR(w[1], 0.2, 1e-12);
}

data::TaskSpec seed_task(const std::string& id, std::uint64_t seed, data::SplitSizes splits, std::vector<int> textures) {
  auto t = small_task(id, seed, 4, 16, splits, std::move(textures));
  auto& fam = std::get<data::SyntheticFamily>(t.source);
  fam.noise = 0.03;
  fam.size_min = 0.6;
  fam.size_max = 0.85;
  return t;
}

class SeedTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    store_ = new store::SystemStore;
    datasets_ = new store::DatasetRegistry;
    store_->register_task(seed_task("base", 11, {600, 200, 200}, {0, 1, 2}));
    store_->register_task(seed_task("aux", 12, {400, 200, 200}, {3, 4}));
    store_->register_task(seed_task("target", 13, {200, 200, 200}, {5}));
    train::SeedConfig cfg;
    cfg.base_task = "base";
    cfg.hidden = {64};
    cfg.base_steps = 600;
    cfg.finetune_steps = 200;
    cfg.seed = 3;
    seeded_ = new std::vector<train::SeededPath>(train::seed_store(*store_, *datasets_, cfg, {"base", "aux", "target"}));
  }
  static void TearDownTestSuite() {
    delete seeded_;
    delete datasets_;
    delete store_;
  }

  static store::SystemStore* store_;
  static store::DatasetRegistry* datasets_;
  static std::vector<train::SeededPath>* seeded_;
};

store::SystemStore* SeedTest::store_ = nullptr;
store::DatasetRegistry* SeedTest::datasets_ = nullptr;
std::vector<train::SeededPath>* SeedTest::seeded_ = nullptr;

TEST_F(SeedTest, PublishesOneFrozenPathPerTask) {
  ASSERT_EQ(seeded_->size(), 3u);
  EXPECT_EQ(store_->path_ids().size(), 3u);
  for (const auto& s : *seeded_) {
    const auto& p = store_->path(s.path_id);
    EXPECT_EQ(p.task_id, s.task_id);
    for (const auto& id : p.module_ids) EXPECT_TRUE(store_->module(id).frozen);
  }
}

TEST_F(SeedTest, RecordsTrunkLineage) {
  const auto& base = store_->path("base.path");
  for (const std::string task : {"aux", "target"}) {
    const auto& p = store_->path(task + ".path");
    ASSERT_EQ(p.module_ids.size(), base.module_ids.size());
    for (std::size_t k = 0; k + 1 < p.module_ids.size(); ++k) {
      const auto& m = store_->module(p.module_ids[k]);
      ASSERT_TRUE(m.parent_module_id.has_value());
      EXPECT_EQ(*m.parent_module_id, base.module_ids[k]);
      EXPECT_EQ(m.last_trained_task, task);
    }
  }
}

TEST_F(SeedTest, RefusesToReseed) {
  train::SeedConfig cfg;
  cfg.base_task = "base";
  EXPECT_THROW(train::seed_store(*store_, *datasets_, cfg, {"base", "aux", "target"}), StoreError);
}

TEST_F(SeedTest, MainPathWellAboveChance) {
  store::RepresentationCache cache(*store_, *datasets_);
  train::TrainContext c{*store_, cache, *datasets_, 0};
  for (const auto& s : *seeded_) {
    const double acc = train::evaluate_path(s.path_id, s.task_id, c, data::Split::validation);
    EXPECT_EQ(acc, s.validation_accuracy);
    EXPECT_GE(acc, 0.25 + 0.20) << s.path_id;
  }
}

TEST_F(SeedTest, SupportPathsTransferToTarget) {
  store::RepresentationCache cache(*store_, *datasets_);
  train::TrainContext c{*store_, cache, *datasets_, 0};
  EXPECT_GT(train::evaluate_path("base.path", "target", c, data::Split::validation), 0.25 + 0.10);
  EXPECT_GT(train::evaluate_path("aux.path", "target", c, data::Split::validation), 0.25 + 0.10);
}

}  // namespace

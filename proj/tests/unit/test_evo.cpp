#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "mpath/errors.hpp"
#include "mpath/evo/agent.hpp"
#include "mpath/evo/replicas.hpp"

namespace {

using namespace mpath;
using namespace mpath::evo;
using mpath::testing::publish_simple_path;
using mpath::testing::small_task;

arch::MultipathModel stub(const std::string& id, double score, std::size_t offsprings) {
  arch::MultipathModel m;
  m.model_id = id;
  m.score = score;
  m.num_offsprings = offsprings;
  return m;
}

TEST(Ablation, NamesRoundTrip) {
  for (auto m : {AblationMode::none, AblationMode::standard_aggregation, AblationMode::sum_aggregation,
                 AblationMode::zero_bias_init, AblationMode::unit_lr_multiplier})
    EXPECT_EQ(parse_ablation(ablation_name(m)), m);
  EXPECT_THROW(parse_ablation("no-router"), ConfigError);
}

TEST(Population, SortsByScoreThenCreation) {
  Population p;
  p.insert(stub("a", 0.5, 0), 0);
  p.insert(stub("b", 0.7, 0), 1);
  p.insert(stub("c", 0.5, 0), 2);
  p.insert(stub("d", 0.7, 0), 3);
  std::vector<std::string> order;
  for (const auto& e : p.entries()) order.push_back(e.model.model_id);
  EXPECT_EQ(order, (std::vector<std::string>{"b", "d", "a", "c"}));
  EXPECT_EQ(*p.find("a"), 2u);
  EXPECT_FALSE(p.find("z").has_value());
}

TEST(SelectParent, EmptyPopulationGivesSentinel) {
  Population p;
  Rng rng(1);
  EXPECT_FALSE(select_parent(p, rng).has_value());
  EXPECT_EQ(selection_probabilities(p), std::vector<double>{1.0});
}

TEST(SelectParent, FreshTopEntryAlwaysAccepted) {
  Population p;
  p.insert(stub("a", 0.9, 0), 0);
  p.insert(stub("b", 0.5, 0), 1);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(select_parent(p, rng), std::optional<std::size_t>(0));
}

std::vector<double> monte_carlo(const Population& p, int draws, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> freq(p.size() + 1, 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto s = select_parent(p, rng);
    freq[s ? *s : p.size()] += 1.0;
  }
  for (double& f : freq) f /= draws;
  return freq;
}

TEST(SelectParent, TwoEntryDistribution) {
  Population p;
  p.insert(stub("m1", 0.9, 1), 0);
  p.insert(stub("m2", 0.8, 0), 1);
  const auto freq = monte_carlo(p, 100000, 3);
  EXPECT_NEAR(freq[0], 0.5, 0.01);
  EXPECT_NEAR(freq[1], 0.5, 0.01);
  EXPECT_EQ(freq[2], 0.0);
}

TEST(SelectParent, ThreeEntryDistributionMatchesClosedForm) {
  Population p;
  p.insert(stub("m1", 0.9, 1), 0);
  p.insert(stub("m2", 0.8, 2), 1);
  p.insert(stub("m3", 0.7, 3), 2);
  // Hand-derived: 1/2, 1/2*1/4, 1/2*3/4*1/8, remainder.
  const std::vector<double> expected{0.5, 0.125, 0.046875, 0.328125};
  const auto closed = selection_probabilities(p);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_DOUBLE_EQ(closed[i], expected[i]);
  const auto freq = monte_carlo(p, 100000, 4);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(freq[i], expected[i], 0.01);
}

class EvoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_.register_task(small_task("t", 1, 4, 8, {64, 48, 48}, {0, 1}));
    store_.register_task(small_task("a", 2, 4, 8, {64, 48, 48}, {2}));
    store_.register_task(small_task("b", 3, 3, 8, {64, 48, 48}, {3}));
    store_.register_task(small_task("c", 4, 4, 8, {64, 48, 48}, {4}));
    Rng rng(9);
    publish_simple_path(store_, "pT", "t", "trunkT", 10, rng);
    publish_simple_path(store_, "pA", "a", "trunkA", 10, rng);
    publish_simple_path(store_, "pB", "b", "trunkT", 10, rng);
    publish_simple_path(store_, "pC", "c", "trunkC", 10, rng);
  }

  AgentConfig config() const {
    AgentConfig c;
    c.target_task = "t";
    c.cycles = 3;
    c.samples_per_cycle = 4;
    c.workers = 1;
    c.budget = {40, 16};
    c.seed = 17;
    return c;
  }

  store::SystemStore store_;
  store::DatasetRegistry datasets_;
};

TEST_F(EvoTest, RandomInitUsesDefaultsOnEmptyPopulation) {
  Rng rng(1);
  const auto m = random_init_model({}, store_, config(), rng, "m");
  EXPECT_EQ(m.hyperparams, train::Hyperparams{});
  EXPECT_EQ(m.main_path_id, "pT");
  ASSERT_EQ(m.support_path_ids.size(), 1u);
  EXPECT_NE(m.support_path_ids[0], "pT");
  for (const auto& c : m.connectors)
    for (double v : c.kernel.values()) EXPECT_EQ(v, 0.0);
  const auto prior = arch::prior_weights(m);
  EXPECT_NEAR(prior[0], 0.8, 1e-12);
}

TEST_F(EvoTest, RandomInitCopiesBestHyperparams) {
  Population p;
  auto best = stub("best", 0.9, 0);
  best.hyperparams.learning_rate = 0.1;
  auto other = stub("other", 0.3, 0);
  other.hyperparams.momentum = 0.5;
  p.insert(other, 0);
  p.insert(best, 1);
  Rng rng(1);
  EXPECT_EQ(random_init_model(p, store_, config(), rng, "m").hyperparams, best.hyperparams);
}

TEST_F(EvoTest, RandomInitSamplesWithoutReplacement) {
  auto cfg = config();
  cfg.default_num_paths = 3;
  Rng rng(2);
  std::map<std::string, int> seen;
  for (int i = 0; i < 300; ++i) {
    const auto m = random_init_model({}, store_, cfg, rng, "m");
    ASSERT_EQ(m.support_path_ids.size(), 2u);
    EXPECT_NE(m.support_path_ids[0], m.support_path_ids[1]);
    for (const auto& s : m.support_path_ids) ++seen[s];
  }
  EXPECT_EQ(seen.size(), 3u);
  for (const auto& [id, n] : seen) EXPECT_GT(n, 100) << id;
}

TEST_F(EvoTest, ForcedFirstSupport) {
  auto cfg = config();
  cfg.forced_first_support = "pC";
  cfg.default_num_paths = 3;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(random_init_model({}, store_, cfg, rng, "m").support_path_ids[0], "pC");
}

TEST_F(EvoTest, ExclusionsLimitEligiblePaths) {
  auto cfg = config();
  cfg.support_path_exclusions = {"pA", "pB"};
  Rng rng(4);
  EXPECT_EQ(eligible_support_paths(store_, cfg, "pT"), std::vector<std::string>{"pC"});
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(random_init_model({}, store_, cfg, rng, "m").support_path_ids, std::vector<std::string>{"pC"});
  cfg.support_path_exclusions = {"pA", "pB", "pC"};
  EXPECT_THROW(random_init_model({}, store_, cfg, rng, "m"), StoreError);
}

TEST_F(EvoTest, AblationsShapeRandomInit) {
  Rng rng(5);
  auto cfg = config();
  cfg.ablation = AblationMode::zero_bias_init;
  for (double w : arch::prior_weights(random_init_model({}, store_, cfg, rng, "m"))) EXPECT_NEAR(w, 0.5, 1e-12);
  cfg.ablation = AblationMode::sum_aggregation;
  EXPECT_FALSE(random_init_model({}, store_, cfg, rng, "m").router.has_value());
  cfg.ablation = AblationMode::unit_lr_multiplier;
  EXPECT_EQ(random_init_model({}, store_, cfg, rng, "m").hyperparams.router_lr_multiplier, 1.0);
  cfg.ablation = AblationMode::standard_aggregation;
  EXPECT_EQ(random_init_model({}, store_, cfg, rng, "m").routing.aggregation, arch::AggregationMode::standard);
}

TEST_F(EvoTest, LearningRateStepsToAdjacentValues) {
  auto cfg = config();
  cfg.mutation_probability = 1.0;
  Rng rng(6);
  std::set<double> seen;
  for (int i = 0; i < 200; ++i) {
    auto parent = random_init_model({}, store_, cfg, rng, "p");
    seen.insert(mutate(parent, store_, cfg, rng, "c").hyperparams.learning_rate);
  }
  EXPECT_EQ(seen, (std::set<double>{0.01, 0.05}));

  std::set<double> low;
  for (int i = 0; i < 50; ++i) {
    auto parent = random_init_model({}, store_, cfg, rng, "p");
    parent.hyperparams.learning_rate = 0.0001;
    low.insert(mutate(parent, store_, cfg, rng, "c").hyperparams.learning_rate);
  }
  EXPECT_EQ(low, std::set<double>{0.0002});
}

TEST_F(EvoTest, PathCountRespectsBounds) {
  auto cfg = config();
  cfg.default_num_paths = 3;
  cfg.mutation_probability = 1.0;
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    auto parent = random_init_model({}, store_, cfg, rng, "p");
    const auto child = mutate(parent, store_, cfg, rng, "c");
    EXPECT_LE(child.num_paths(), 3u);
    EXPECT_EQ(child.num_paths(), 2u);  // add infeasible at the cap, remove always fires at mu = 1
  }
  cfg.default_num_paths = 2;
  for (int i = 0; i < 100; ++i) {
    auto parent = random_init_model({}, store_, cfg, rng, "p");
    EXPECT_EQ(mutate(parent, store_, cfg, rng, "c").num_paths(), 3u);
  }
}

TEST_F(EvoTest, ChildIsADeepCopy) {
  auto cfg = config();
  Rng rng(8);
  auto parent = random_init_model({}, store_, cfg, rng, "p");
  parent.connectors[0].kernel[0] = 0.5;
  parent.router->kernel[1] = -0.25;
  const auto snapshot = parent;
  auto child = mutate(parent, store_, cfg, rng, "c");
  EXPECT_EQ(parent.num_offsprings, 1u);
  EXPECT_EQ(*child.parent_id, "p");
  EXPECT_EQ(child.connectors[0].module_id, "c.conn0");
  child.connectors[0].kernel[0] = 9.0;
  if (child.router) child.router->kernel[1] = 9.0;
  EXPECT_EQ(parent.connectors[0].kernel, snapshot.connectors[0].kernel);
  EXPECT_EQ(parent.router->kernel, snapshot.router->kernel);
  EXPECT_EQ(parent.connectors[0].module_id, "p.conn0");
}

TEST_F(EvoTest, SupportChangeResetsRouter) {
  auto cfg = config();
  Rng rng(9);
  int changed = 0;
  for (int i = 0; i < 200; ++i) {
    auto parent = random_init_model({}, store_, cfg, rng, "p");
    parent.router->kernel[0] = 3.0;
    const auto child = mutate(parent, store_, cfg, rng, "c");
    if (child.support_path_ids != parent.support_path_ids) {
      ++changed;
      for (double v : child.router->kernel.values()) EXPECT_EQ(v, 0.0);
      EXPECT_NEAR(arch::prior_weights(child)[0], 0.8, 1e-12);
      EXPECT_EQ(child.ema.size(), child.num_paths());
    } else {
      EXPECT_EQ(child.router->kernel[0], 3.0);
    }
  }
  EXPECT_GT(changed, 0);
}

TEST_F(EvoTest, EveryChildHasAMutation) {
  auto cfg = config();
  cfg.mutation_probability = 0.01;
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    auto parent = random_init_model({}, store_, cfg, rng, "p");
    EXPECT_NE(genome_key(mutate(parent, store_, cfg, rng, "c")), genome_key(parent));
  }
}

TEST_F(EvoTest, RepeatedMutationStaysInValueLists) {
  auto cfg = config();
  cfg.forced_first_support = "pB";
  Rng rng(11);
  auto m = random_init_model({}, store_, cfg, rng, "m0");
  for (int i = 1; i < 1000; ++i) {
    m = mutate(m, store_, cfg, rng, "m" + std::to_string(i));
    ASSERT_NO_THROW(m.hyperparams.validate());
    ASSERT_EQ(m.support_path_ids[0], "pB");
  }
}

TEST_F(EvoTest, UnitLrAblationNeverMutatesMultiplier) {
  auto cfg = config();
  cfg.ablation = AblationMode::unit_lr_multiplier;
  cfg.mutation_probability = 1.0;
  Rng rng(12);
  auto m = random_init_model({}, store_, cfg, rng, "m0");
  for (int i = 1; i < 100; ++i) {
    m = mutate(m, store_, cfg, rng, "m" + std::to_string(i));
    ASSERT_EQ(m.hyperparams.router_lr_multiplier, 1.0);
  }
}

std::vector<CycleReport> run_agent(const store::SystemStore& seeded, store::DatasetRegistry& ds,
                                   const AgentConfig& cfg) {
  store::SystemStore s = seeded;
  store::RepresentationCache cache(s, ds);
  train::TrainContext ctx{s, cache, ds, cfg.seed};
  Agent agent(cfg);
  agent.run(s, ctx);
  return agent.reports();
}

TEST_F(EvoTest, AgentIsDeterministic) {
  const auto r1 = run_agent(store_, datasets_, config());
  const auto r2 = run_agent(store_, datasets_, config());
  ASSERT_EQ(r1.size(), 3u);
  EXPECT_EQ(r1, r2);
  auto cfg = config();
  cfg.workers = 2;
  EXPECT_EQ(run_agent(store_, datasets_, cfg), run_agent(store_, datasets_, cfg));
}

TEST_F(EvoTest, BestScoreNeverDecreasesAndWinnersArePublished) {
  store::SystemStore s = store_;
  store::RepresentationCache cache(s, datasets_);
  train::TrainContext ctx{s, cache, datasets_, 1};
  auto cfg = config();
  cfg.cycles = 4;
  Agent agent(cfg);
  agent.run(s, ctx);
  const double main = train::evaluate_path("pT", "t", ctx, data::Split::validation);
  double prev = 0.0;
  for (const auto& r : agent.reports()) {
    EXPECT_GE(r.best_validation, prev);
    EXPECT_GE(r.best_validation, main);
    prev = r.best_validation;
    ASSERT_TRUE(s.has_model(r.winner_id));
    EXPECT_EQ(*s.model(r.winner_id).test_accuracy, r.test_accuracy);
    EXPECT_EQ(s.model(r.winner_id).validation_score, r.best_validation);
    EXPECT_EQ(train::evaluate(arch::from_published(s, r.winner_id), ctx, data::Split::test), r.test_accuracy);
  }
  // Pruning invariant: every non-root entry beat its parent.
  const auto& pop = agent.population();
  for (const auto& e : pop.entries()) {
    if (!e.model.parent_id) continue;
    if (auto p = pop.find(*e.model.parent_id)) EXPECT_GT(*e.model.score, *pop[*p].model.score);
  }
}

TEST_F(EvoTest, SumAblationHasNoRouter) {
  store::SystemStore s = store_;
  store::RepresentationCache cache(s, datasets_);
  train::TrainContext ctx{s, cache, datasets_, 1};
  auto cfg = config();
  cfg.ablation = AblationMode::sum_aggregation;
  cfg.cycles = 2;
  Agent agent(cfg);
  agent.run(s, ctx);
  for (const auto& e : agent.population().entries()) EXPECT_FALSE(e.model.router.has_value());
  for (const auto& id : s.model_ids()) EXPECT_FALSE(s.model(id).router_id.has_value());
}

TEST_F(EvoTest, StateRoundTripContinuesIdentically) {
  auto cfg = config();
  cfg.cycles = 3;
  store::SystemStore full = store_;
  std::vector<CycleReport> expected;
  {
    store::RepresentationCache cache(full, datasets_);
    train::TrainContext ctx{full, cache, datasets_, cfg.seed};
    Agent agent(cfg);
    agent.run(full, ctx);
    expected = agent.reports();
  }
  store::SystemStore part = store_;
  store::Json state;
  {
    store::RepresentationCache cache(part, datasets_);
    train::TrainContext ctx{part, cache, datasets_, cfg.seed};
    Agent agent(cfg);
    agent.run_cycle(part, ctx);
    state = store::Json::parse(agent.save_state().dump());
  }
  Agent resumed = Agent::load_state(state);
  EXPECT_EQ(resumed.cycles_done(), 1u);
  store::RepresentationCache cache(part, datasets_);
  train::TrainContext ctx{part, cache, datasets_, cfg.seed};
  resumed.run(part, ctx);
  EXPECT_EQ(resumed.reports(), expected);
  EXPECT_TRUE(part.equals(full));
}

TEST_F(EvoTest, ConfigJsonRoundTripAndValidation) {
  auto cfg = config();
  cfg.forced_first_support = "pA";
  cfg.support_path_exclusions = {"pC"};
  cfg.ablation = AblationMode::zero_bias_init;
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
  auto j = config_to_json(cfg);
  j["colour"] = 1;
  EXPECT_THROW(config_from_json(j), ConfigError);
  j = config_to_json(cfg);
  j["default_num_paths"] = 4;
  EXPECT_THROW(config_from_json(j), ConfigError);
  j = config_to_json(cfg);
  j["support_path_exclusions"] = {"pA"};
  EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Summary, SingleValue) {
  const std::vector<double> v{0.7};
  const auto s = summarize(v);
  EXPECT_EQ(s.mean, 0.7);
  EXPECT_EQ(s.sem, 0.0);
  EXPECT_EQ(s.max, 0.7);
}

TEST(Summary, IdenticalValuesHaveZeroSem) {
  const std::vector<double> v(10, 0.625);
  EXPECT_EQ(summarize(v).sem, 0.0);
}

TEST(Summary, KnownValues) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  // sample sd = sqrt(5/3); sem = sd / 2
  EXPECT_NEAR(s.sem, 0.6454972243679028, 1e-15);
  EXPECT_EQ(s.max, 4.0);
}

TEST_F(EvoTest, ReplicasAggregate) {
  auto cfg = config();
  cfg.cycles = 2;
  cfg.samples_per_cycle = 2;
  const auto runs = run_replicas(store_, datasets_, cfg, 3);
  ASSERT_EQ(runs.size(), 3u);
  std::vector<std::vector<CycleReport>> reports;
  for (const auto& r : runs) {
    EXPECT_EQ(r.reports.size(), 2u);
    EXPECT_GE(r.reports.back().best_validation, r.main_validation);
    reports.push_back(r.reports);
  }
  EXPECT_NE(runs[0].seed, runs[1].seed);
  const auto rows = aggregate_curves(reports);
  ASSERT_EQ(rows.size(), 2u);
  std::vector<double> last;
  for (const auto& r : reports) last.push_back(r[1].test_accuracy);
  EXPECT_DOUBLE_EQ(rows[1].test.mean, summarize(last).mean);
  EXPECT_EQ(rows[1].validation.n, 3u);
  EXPECT_FALSE(store_.has_model(runs[0].reports[0].winner_id));
  EXPECT_TRUE(runs[0].store.has_model(runs[0].reports[0].winner_id));
}

}  // namespace

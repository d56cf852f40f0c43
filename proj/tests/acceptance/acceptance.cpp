// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "multipath_check.hpp"
#include "mpath/arch/router.hpp"
#include "mpath/autodiff/ops.hpp"
#include "mpath/cli/commands.hpp"
#include "mpath/evo/agent.hpp"
#include "mpath/store/checkpoint.hpp"

namespace {

using namespace mpath;
using mpath::testing::random_tensor;
using Clock = std::chrono::steady_clock;

struct Outcome {
  Outcome() = default;
  Outcome(bool p, std::string d) : pass(p), detail(std::move(d)) {}

  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> plain_softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> out;
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  for (double v : z) out.push_back(std::exp(v - mx) / total);
  return out;
}

std::size_t first_max(const ad::Tensor& t, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c)
    if (t.at(r, c) > t.at(r, best)) best = c;
  return best;
}

Outcome bias_init() {
  auto err_for = [](double w, std::size_t n) {
    const ad::Tensor b = arch::init_router_bias(w, n);
    const auto s = plain_softmax(b.values());
    double err = std::abs(s[0] - w);
    for (std::size_t i = 1; i < n; ++i) err = std::max(err, std::abs(s[i] - (1.0 - w) / static_cast<double>(n - 1)));
    return err;
  };
  const double example = err_for(0.8, 3);
  Rng rng(0xB1A5);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) worst = std::max(worst, err_for(rng.uniform(0.05, 0.95), 2 + rng.index(5)));
  return {example <= 1e-9 && worst <= 1e-9,
          fmt::format("(0.8, 3) error {:.2e}; 100 random pairs max error {:.2e}; tolerance 1e-9", example, worst)};
}

Outcome init_equivalence(const store::SystemStore& s) {
  store::DatasetRegistry datasets;
  store::RepresentationCache cache(s, datasets);
  train::TrainContext ctx{s, cache, datasets, 0};
  const std::string main = train::seeded_path_id("target");
  const auto m = arch::make_multipath("accept.fresh", s, "target", main,
                                      {train::seeded_path_id("base"), train::seeded_path_id("aux")}, {}, {});
  const std::size_t n = datasets.get(s.task("target"))->validation.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const arch::PathInputs in = arch::gather_inputs(cache, m, data::Split::validation, idx);
  const ad::Tensor logits = arch::multipath_logits(m, in);
  std::size_t differ = 0;
  for (std::size_t r = 0; r < n; ++r) differ += first_max(logits, r) != first_max(in.main, r);
  const double acc_multi = train::evaluate(m, ctx, data::Split::validation);
  const double acc_main = train::evaluate_path(main, "target", ctx, data::Split::validation);
  return {n == 500 && differ == 0 && acc_multi == acc_main,
          fmt::format("{} validation samples, {} argmax differences, accuracy {:.4f} vs main {:.4f}", n, differ,
                      acc_multi, acc_main)};
}

Outcome gradient_audit(const store::SystemStore& s) {
  using namespace ad;
  using mpath::testing::grad_check;
  using mpath::testing::LossBuilder;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checks = 0;
  bool sg_ok = true;
  for (int cfg = 0; cfg < 3; ++cfg) {
    std::mt19937_64 rng(700 + cfg);
    const std::size_t m = 2 + cfg, n = 3 + 2 * cfg, k = 4 + cfg;
    const Shape sh{m, n};
    const Tensor probe = random_tensor(sh, rng);
    auto weigh = [probe](Tape& t, Var v) { return sum(mul(v, t.constant(probe))); };
    auto check = [&](const LossBuilder& f, std::vector<Tensor> params) {
      worst = std::max(worst, grad_check(f, std::move(params)).max_rel_error);
      ++checks;
    };
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, matmul(p[0], p[1])); },
          {random_tensor({m, k}, rng), random_tensor({k, n}, rng)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, add(p[0], p[1])); },
          {random_tensor(sh, rng), random_tensor(sh, rng)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, sub(p[0], p[1])); },
          {random_tensor(sh, rng), random_tensor(sh, rng)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, mul(p[0], p[1])); },
          {random_tensor(sh, rng), random_tensor(sh, rng)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, scale(p[0], 0.3)); }, {random_tensor(sh, rng)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, add_bias(p[0], p[1])); },
          {random_tensor(sh, rng), random_tensor({n}, rng)});
    Tensor away = random_tensor(sh, rng, 0.05, 1.0);
    for (std::size_t i = 0; i < away.size(); i += 2) away[i] = -away[i];
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, relu(p[0])); }, {away});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, gelu(p[0])); }, {random_tensor(sh, rng, -3, 3)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, softmax(p[0], 1)); },
          {random_tensor(sh, rng, -2, 2)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, softmax(p[0], 0)); },
          {random_tensor(sh, rng, -2, 2)});
    check([&](Tape&, const std::vector<Var>& p) { return mean(mul(p[0], p[0])); }, {random_tensor(sh, rng)});
    check([&](Tape& t, const std::vector<Var>& p) { return weigh(t, reshape(reshape(p[0], {m * n}), sh)); },
          {random_tensor(sh, rng)});
    const Tensor wide = random_tensor({m, 2 * n}, rng), tall = random_tensor({2 * m, n}, rng);
    check(
        [&](Tape& t, const std::vector<Var>& p) {
          const Var parts[] = {p[0], p[1]};
          return sum(mul(concat(parts, 1), t.constant(wide)));
        },
        {random_tensor(sh, rng), random_tensor(sh, rng)});
    check(
        [&](Tape& t, const std::vector<Var>& p) {
          const Var parts[] = {p[0], p[1]};
          return sum(mul(concat(parts, 0), t.constant(tall)));
        },
        {random_tensor(sh, rng), random_tensor(sh, rng)});
    check(
        [&](Tape& t, const std::vector<Var>& p) {
          const Var parts[] = {p[0], p[1], p[2]};
          return weigh(t, weighted_sum(parts, softmax(p[3], 1)));
        },
        {random_tensor(sh, rng), random_tensor(sh, rng), random_tensor(sh, rng), random_tensor({m, 3}, rng)});
    check(
        [&](Tape& t, const std::vector<Var>& p) {
          const Var parts[] = {p[0], p[1]};
          return weigh(t, add_n(parts));
        },
        {random_tensor(sh, rng), random_tensor(sh, rng)});
    std::vector<int> labels;
    for (std::size_t r = 0; r < m; ++r) labels.push_back(static_cast<int>(r % n));
    check([&](Tape&, const std::vector<Var>& p) { return cross_entropy(p[0], labels); },
          {random_tensor(sh, rng, -2, 2)});

    // Stop-gradient has no finite-difference counterpart: its forward is the
    // identity and its gradient is zero.
    {
      Tape tape;
      const Tensor x = random_tensor(sh, rng);
      const Var v = tape.parameter(x);
      const Var y = stop_gradient(v);
      sg_ok = sg_ok && y.value() == x;
      const Tensor g = tape.backward(weigh(tape, add(y, scale(v, 0.0)))).of(v);
      for (double e : g.values()) sg_ok = sg_ok && e == 0.0;
    }

    // Whole multipath forward, router included; the standard aggregation with
    // a unit multiplier has the true gradient of its forward.
    std::vector<std::vector<std::string>> supports{
        {train::seeded_path_id("base")},
        {train::seeded_path_id("aux")},
        {train::seeded_path_id("base"), train::seeded_path_id("aux")}};
    arch::MultipathModel model = arch::make_multipath("accept.audit", s, "target", train::seeded_path_id("target"),
                                                      supports[cfg], {arch::AggregationMode::standard, 0.8, false}, {});
    model.hyperparams.router_lr_multiplier = 1.0;
    for (auto& c : model.connectors) {
      c.kernel = random_tensor(c.kernel.shape(), rng, -0.5, 0.5);
      c.bias = random_tensor(c.bias.shape(), rng, -0.5, 0.5);
    }
    model.router->kernel = random_tensor(model.router->kernel.shape(), rng, -0.5, 0.5);
    arch::PathInputs in;
    const std::size_t b = 5;
    in.main = random_tensor({b, 6}, rng, -3, 3);
    for (std::size_t i = 0; i < model.support_path_ids.size(); ++i) in.support.push_back(random_tensor({b, 6}, rng, -3, 3));
    const std::vector<int> ml{0, 1, 2, 3, 5};
    worst = std::max(worst, mpath::testing::model_grad_check(model, in, ml).max_rel_error);
    model.routing.aggregation = arch::AggregationMode::decoupled;
    worst = std::max(worst, mpath::testing::model_grad_check(model, in, ml, true).max_rel_error);
    checks += 2;
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-4 && sg_ok && elapsed < 60.0,
          fmt::format("{} checks over 3 configurations, max relative error {:.2e}, stop-gradient {}, {:.1f} s", checks,
                      worst, sg_ok ? "ok" : "broken", elapsed)};
}

Outcome decoupling(const store::SystemStore& s) {
  std::mt19937_64 rng(4242);
  const std::vector<std::pair<double, double>> settings{{0.99, 0.01}, {0.5, 0.5}, {0.01, 0.99}};
  const std::size_t b = 8;
  arch::PathInputs in;
  in.main = random_tensor({b, 6}, rng, -3, 3);
  in.support.push_back(random_tensor({b, 6}, rng, -3, 3));
  const ad::Tensor probe = random_tensor({b, 6}, rng);
  const ad::Tensor kernel = random_tensor({6, 6}, rng);

  auto grads = [&](arch::AggregationMode mode, std::pair<double, double> w, double& w_support) {
    auto m = arch::make_multipath("accept.decouple", s, "target", train::seeded_path_id("target"),
                                  {train::seeded_path_id("base")}, {mode, 0.8, false}, {});
    m.connectors[0].kernel = kernel;
    m.router->bias[0] = std::log(w.first);
    m.router->bias[1] = std::log(w.second);
    ad::Tape tape;
    const auto fwd = arch::assemble_and_forward(tape, m, in);
    w_support = fwd.weights->value().at(0, 1);
    const auto g = tape.backward(ad::sum(ad::mul(fwd.logits, tape.constant(probe))));
    return std::pair{g.of(fwd.connectors[0].kernel), g.of(fwd.connectors[0].bias)};
  };
  double dec_err = 0.0, std_err = 0.0, unused = 0.0;
  const auto ref = grads(arch::AggregationMode::decoupled, settings[1], unused);
  for (const auto& w : settings) {
    const auto d = grads(arch::AggregationMode::decoupled, w, unused);
    double ws = 0.0;
    const auto st = grads(arch::AggregationMode::standard, w, ws);
    for (std::size_t i = 0; i < ref.first.size(); ++i) {
      dec_err = std::max(dec_err, std::abs(d.first[i] - ref.first[i]));
      std_err = std::max(std_err, std::abs(st.first[i] - ws * ref.first[i]));
    }
    for (std::size_t i = 0; i < ref.second.size(); ++i) {
      dec_err = std::max(dec_err, std::abs(d.second[i] - ref.second[i]));
      std_err = std::max(std_err, std::abs(st.second[i] - ws * ref.second[i]));
    }
  }
  return {dec_err <= 1e-10 && std_err <= 1e-10,
          fmt::format("decoupled max deviation {:.2e}; standard deviation from weight scaling {:.2e}", dec_err,
                      std_err)};
}

Outcome lr_multiplier(const store::SystemStore& s) {
  store::DatasetRegistry datasets;
  store::RepresentationCache cache(s, datasets);
  auto base = arch::make_multipath("accept.lambda", s, "target", train::seeded_path_id("target"),
                                   {train::seeded_path_id("base"), train::seeded_path_id("aux")}, {}, {});
  std::mt19937_64 rng(55);
  for (auto& c : base.connectors) c.kernel = random_tensor(c.kernel.shape(), rng, -0.3, 0.3);
  base.router->kernel = random_tensor(base.router->kernel.shape(), rng, -0.3, 0.3);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto in = arch::gather_inputs(cache, base, data::Split::train, idx);
  const auto& labels = datasets.get(s.task("target"))->train.labels;
  const std::vector<int> batch_labels(labels.begin(), labels.begin() + 32);
  const double lr = 0.1;

  auto step = [&](double lambda, double router_lr) {
    auto m = base;
    m.hyperparams.router_lr_multiplier = lambda;
    ad::Tape tape;
    const auto fwd = arch::assemble_and_forward(tape, m, in);
    const auto g = tape.backward(ad::cross_entropy(fwd.logits, batch_labels));
    train::Optimizer opt;
    opt.apply(*m.router, g.of(fwd.router->kernel), g.of(fwd.router->bias), {router_lr, 0.9, true});
    return *m.router;
  };
  const auto scaled = step(0.05, lr);
  const auto reference = step(1.0, 0.05 * lr);
  double err = 0.0, moved = 0.0;
  for (std::size_t i = 0; i < scaled.kernel.size(); ++i) {
    err = std::max(err, std::abs(scaled.kernel[i] - reference.kernel[i]));
    moved = std::max(moved, std::abs(scaled.kernel[i] - base.router->kernel[i]));
  }
  for (std::size_t i = 0; i < scaled.bias.size(); ++i) err = std::max(err, std::abs(scaled.bias[i] - reference.bias[i]));
  return {err <= 1e-10 && moved > 0.0,
          fmt::format("max router parameter difference {:.2e} (largest update {:.2e})", err, moved)};
}

Outcome parent_selection() {
  evo::Population pop;
  const std::vector<int> offspring{1, 2, 3};
  for (std::size_t i = 0; i < offspring.size(); ++i) {
    arch::MultipathModel m;
    m.model_id = "m" + std::to_string(i);
    m.score = 0.9 - 0.1 * static_cast<double>(i);
    m.num_offsprings = offspring[i];
    pop.insert(std::move(m), i);
  }
  std::vector<double> expected;
  double reach = 1.0;
  for (int o : offspring) {
    expected.push_back(reach * std::pow(0.5, o));
    reach -= expected.back();
  }
  expected.push_back(reach);
  std::vector<double> counts(4, 0.0);
  Rng rng(0x5E1EC7);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto p = evo::select_parent(pop, rng);
    counts[p ? *p : 3] += 1.0;
  }
  double err = 0.0;
  std::string shown;
  for (std::size_t i = 0; i < 4; ++i) {
    err = std::max(err, std::abs(counts[i] / draws - expected[i]));
    shown += fmt::format("{}{:.4f}/{:.4f}", i ? " " : "", counts[i] / draws, expected[i]);
  }
  return {err <= 0.01, fmt::format("observed/expected {} (random init last); max deviation {:.4f}", shown, err)};
}

Outcome desk_end_to_end(const cli::RunConfig& config) {
  const auto t0 = Clock::now();
  std::ostringstream log;
  const auto multi = cli::cmd_evolve(config, {}, log);
  cli::EvolveOptions std_opts;
  std_opts.ablate = "standard-aggregation";
  const auto standard = cli::cmd_evolve(config, std_opts, log);
  const double elapsed = seconds_since(t0);

  Outcome o;
  std::size_t floor_ok = 0, above = 0, dec_below = 0, std_collapse = 0;
  for (const auto& r : multi.replicas) {
    const auto& last = r.reports.back();
    floor_ok += last.best_validation >= r.main_validation;
    above += last.best_validation - r.main_validation >= 0.01 - 1e-12;
    dec_below += last.main_weight < 0.95;
    o.notes.push_back(fmt::format("decoupled replica seed {:>20}: main {:.4f} best {:.4f} test {:.4f} main weight {:.4f}",
                                  r.seed, r.main_validation, last.best_validation, last.test_accuracy,
                                  last.main_weight));
  }
  for (const auto& r : standard.replicas) {
    const auto& last = r.reports.back();
    std_collapse += last.main_weight > 0.95;
    o.notes.push_back(fmt::format("standard  replica seed {:>20}: main {:.4f} best {:.4f} test {:.4f} main weight {:.4f}",
                                  r.seed, r.main_validation, last.best_validation, last.test_accuracy,
                                  last.main_weight));
  }
  const std::size_t n = multi.replicas.size();
  const bool a = floor_ok == n && above >= 3;
  const bool b = std_collapse >= 3 && dec_below >= 3;
  o.pass = a && b && elapsed < 1800.0;
  o.detail = fmt::format(
      "(a) {} winner >= main in {}/{}, >= main + 1 point in {}/{}; (b) {} standard main weight > 0.95 in {}/{}, "
      "decoupled < 0.95 in {}/{}; {:.0f} s",
      a ? "PASS" : "FAIL", floor_ok, n, above, n, b ? "PASS" : "FAIL", std_collapse, standard.replicas.size(),
      dec_below, n, elapsed);
  return o;
}

Outcome ablation_plumbing(const store::SystemStore& s) {
  store::DatasetRegistry datasets;
  store::RepresentationCache cache(s, datasets);
  train::TrainContext ctx{s, cache, datasets, 3};
  evo::AgentConfig cfg;
  cfg.target_task = "target";
  cfg.budget = {40, 16};

  cfg.ablation = evo::AblationMode::zero_bias_init;
  Rng rng(8);
  double uniform_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = evo::random_init_model({}, s, cfg, rng, "accept.zero" + std::to_string(trial));
    std::vector<std::size_t> idx(64);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto in = arch::gather_inputs(cache, m, data::Split::validation, idx);
    ad::Tape tape;
    const ad::Tensor w = arch::assemble_and_forward(tape, m, in).weights->value();
    for (double v : w.values()) uniform_err = std::max(uniform_err, std::abs(v - 1.0 / static_cast<double>(m.num_paths())));
  }

  cfg.ablation = evo::AblationMode::sum_aggregation;
  bool no_router = true;
  std::size_t keys = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto m = evo::random_init_model({}, s, cfg, rng, "accept.sum" + std::to_string(trial));
    no_router = no_router && !m.router;
    const auto rec = train::train_and_score(m, ctx, cfg.budget);
    keys += rec.trained_parameters.size();
    for (const auto& k : rec.trained_parameters)
      if (k.rfind(arch::router_id(m.model_id), 0) == 0) no_router = false;
  }
  return {uniform_err <= 1e-12 && no_router && keys > 0,
          fmt::format("zero-bias-init max deviation from 1/|P| {:.2e}; sum-aggregation router {} ({} trained tensors)",
                      uniform_err, no_router ? "absent" : "present", keys)};
}

Outcome determinism(const store::SystemStore& seeded, const std::string& scratch) {
  evo::AgentConfig cfg;
  cfg.target_task = "target";
  cfg.cycles = 3;
  cfg.samples_per_cycle = 4;
  cfg.workers = 1;
  cfg.budget = {120, 16};
  cfg.seed = 77;
  cfg.model_prefix = "accept.det";

  auto run = [&](store::SystemStore& s, evo::Agent& agent, std::size_t cycles) {
    store::DatasetRegistry datasets;
    store::RepresentationCache cache(s, datasets);
    train::TrainContext ctx{s, cache, datasets, cfg.seed};
    for (std::size_t c = 0; c < cycles; ++c) agent.run_cycle(s, ctx);
  };
  store::SystemStore s1 = seeded, s2 = seeded, s3 = seeded;
  evo::Agent a1(cfg), a2(cfg), a3(cfg);
  run(s1, a1, 3);
  run(s2, a2, 3);
  const bool repeat = a1.reports() == a2.reports() && s1.equals(s2);

  run(s3, a3, 2);
  const std::string dir = (std::filesystem::path(scratch) / "resume").string();
  store::save_checkpoint(s3, dir + "/store");
  const std::string state = a3.save_state().dump();
  store::SystemStore s4 = store::load_checkpoint(dir + "/store");
  evo::Agent a4 = evo::Agent::load_state(store::Json::parse(state));
  run(s4, a4, 1);
  const bool resumed = a4.reports() == a1.reports() && s4.equals(s1);
  return {repeat && resumed, fmt::format("two runs {}; save -> load -> next cycle {}", repeat ? "identical" : "differ",
                                         resumed ? "identical" : "differs")};
}

Outcome ema_sanity() {
  const std::vector<double> w{0.5, 0.3, 0.2};
  std::vector<double> ema{0.8, 0.1, 0.1};
  ad::Tensor batch({8, 3}, 0.0);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 3; ++c) batch.at(r, c) = w[c];
  for (int step = 0; step < 1000; ++step) arch::update_ema(ema, batch);
  ad::Tape tape;
  std::vector<ad::Var> reps;
  for (int i = 0; i < 3; ++i) reps.push_back(tape.parameter(ad::Tensor({2, 4}, 0.5 * i)));
  ad::Tensor wt({2, 3}, 0.0);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) wt.at(r, c) = w[c];
  const ad::Var wv = tape.constant(wt);
  const auto g = tape.backward(ad::sum(arch::aggregate(reps, wv, arch::AggregationMode::ema_decoupled, ema)));
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    const ad::Tensor gi = g.of(reps[i]);
    for (double v : gi.values()) err = std::max(err, std::abs(v - 1.0));
  }
  return {err <= 1e-3, fmt::format("max |w/EMA(w) - 1| after 1000 steps {:.2e}", err)};
}

void print(int n, const char* name, const Outcome& o) {
  std::cout << fmt::format("criterion {:>2} {} {}: {}", n, o.pass ? "PASS" : "FAIL", name, o.detail) << '\n';
  for (const auto& note : o.notes) std::cout << "    " << note << '\n';
  std::cout.flush();
}

}  // namespace

int main() {
  mpath::testing::TempDir scratch;
  cli::RunConfig config = cli::load_run_config(MPATH_DESK_CONFIG);
  config.store_dir = scratch.file("store");
  config.output_dir = scratch.file("out");

  const auto t0 = Clock::now();
  std::ostringstream seed_log;
  cli::cmd_seed(config, seed_log);
  const store::SystemStore seeded = store::load_checkpoint(config.store_dir);
  std::cout << fmt::format("desk store seeded in {:.1f} s\n", seconds_since(t0));

  bool all = true;
  auto record = [&](int n, const char* name, const Outcome& o) {
    print(n, name, o);
    all = all && o.pass;
  };
  record(1, "bias-init closed form", bias_init());
  record(2, "initialization equivalence", init_equivalence(seeded));
  record(3, "gradient audit", gradient_audit(seeded));
  record(4, "decoupling property", decoupling(seeded));
  record(5, "lr-multiplier equivalence", lr_multiplier(seeded));
  record(6, "parent-selection distribution", parent_selection());
  record(7, "desk-scale end-to-end", desk_end_to_end(config));
  record(8, "ablation plumbing", ablation_plumbing(seeded));
  record(9, "determinism and persistence", determinism(seeded, scratch.str()));
  record(10, "EMA variant sanity", ema_sanity());
  std::cout << fmt::format("{} in {:.0f} s\n", all ? "all criteria pass" : "some criteria fail", seconds_since(t0));
  return all ? 0 : 1;
}

#include "mpath/evo/replicas.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <iomanip>
#include <sstream>

#include "mpath/errors.hpp"
#include "mpath/store/checkpoint.hpp"

namespace mpath::evo {

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  s.max = *std::max_element(values.begin(), values.end());
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sem = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

std::vector<CurveRow> aggregate_curves(const std::vector<std::vector<CycleReport>>& runs) {
  std::vector<CurveRow> rows;
  if (runs.empty()) return rows;
  const std::size_t cycles = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != cycles) throw ValueError("aggregate_curves: replicas ran different numbers of cycles");
  for (std::size_t c = 0; c < cycles; ++c) {
    std::vector<double> val, test, w;
    for (const auto& r : runs) {
      val.push_back(r[c].best_validation);
      test.push_back(r[c].test_accuracy);
      w.push_back(r[c].main_weight);
    }
    rows.push_back({runs.front()[c].cycle, summarize(val), summarize(test), summarize(w)});
  }
  return rows;
}

std::string format_curve_row(const CurveRow& row) {
  std::ostringstream os;
  os << std::setprecision(17) << row.cycle << '\t' << row.validation.mean << '\t' << row.validation.sem << '\t'
     << row.validation.max << '\t' << row.test.mean << '\t' << row.test.sem << '\t' << row.test.max << '\t'
     << row.main_weight.mean << '\t' << row.validation.n;
  return os.str();
}

std::uint64_t replica_seed(std::uint64_t base, std::size_t replica) { return derive_seed(base, 0x5EED0000 + replica); }

namespace {

void save_replica(const std::string& dir, const store::SystemStore& s, const Agent& agent) {
  namespace fs = std::filesystem;
  store::save_checkpoint(s, (fs::path(dir) / "store").string());
  const fs::path tmp = fs::path(dir) / "agent.json.tmp";
  {
    std::ofstream out(tmp);
    out << agent.save_state().dump() << '\n';
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, fs::path(dir) / "agent.json");
}

}  // namespace

std::vector<ReplicaResult> run_replicas(const store::SystemStore& seeded, store::DatasetRegistry& datasets,
                                        const AgentConfig& config, std::size_t n, const ReplicaOptions& options) {
  namespace fs = std::filesystem;
  if (n == 0) throw ValueError("run_replicas: need at least one replica");
  std::vector<ReplicaResult> out;
  for (std::size_t r = 0; r < n; ++r) {
    ReplicaResult res{replica_seed(config.seed, r), {}, seeded, 0.0, 0.0};
    AgentConfig cfg = config;
    cfg.seed = res.seed;
    const std::string dir =
        options.state_dir.empty() ? "" : (fs::path(options.state_dir) / ("replica_" + std::to_string(r))).string();
    std::optional<Agent> agent;
    if (options.resume && !dir.empty() && fs::exists(fs::path(dir) / "agent.json")) {
      std::ifstream in(fs::path(dir) / "agent.json");
      agent.emplace(Agent::load_state(store::Json::parse(in)));
      if (config_to_json(agent->config()).dump() != config_to_json(cfg).dump())
        throw ConfigError("replica " + std::to_string(r) + ": saved state was produced by a different configuration");
      res.store = store::load_checkpoint((fs::path(dir) / "store").string());
    } else {
      agent.emplace(cfg);
    }
    store::RepresentationCache cache(res.store, datasets);
    train::TrainContext ctx{res.store, cache, datasets, res.seed};
    const std::string main = resolve_main_path(res.store, cfg);
    res.main_validation = train::evaluate_path(main, cfg.target_task, ctx, data::Split::validation);
    res.main_test = train::evaluate_path(main, cfg.target_task, ctx, data::Split::test);
    while (agent->cycles_done() < cfg.cycles) {
      const CycleReport rep = agent->run_cycle(res.store, ctx);
      if (!dir.empty()) save_replica(dir, res.store, *agent);
      if (options.on_cycle) options.on_cycle(r, rep);
    }
    res.reports = agent->reports();
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace mpath::evo

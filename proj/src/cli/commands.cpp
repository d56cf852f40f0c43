#include "mpath/cli/commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mpath/cli/stats.hpp"
#include "mpath/errors.hpp"
#include "mpath/store/checkpoint.hpp"
#include "mpath/store/graph.hpp"

namespace mpath::cli {

namespace fs = std::filesystem;
using store::Json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kReplicaExtraHeader = "\tmain_validation\tmain_test";
constexpr const char* kReference = "multipath";

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << text;
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

store::SystemStore open_store(const std::string& dir) {
  if (!store::checkpoint_exists(dir)) throw StoreError("no store at '" + dir + "'; run 'mpath seed' first");
  return store::load_checkpoint(dir);
}

Json summary_to_json(const evo::Summary& s) { return {{"mean", s.mean}, {"sem", s.sem}, {"max", s.max}, {"n", s.n}}; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": not a number: '" + s + "'");
  }
}

std::string cell(const evo::Summary& s) { return fmt::format("{:.4f} ± {:.4f}", s.mean, s.sem); }

}  // namespace

std::vector<train::SeededPath> cmd_seed(const RunConfig& config, std::ostream& out) {
  if (store::checkpoint_exists(config.store_dir))
    throw StoreError("'" + config.store_dir + "' already holds a seeded store; refusing to seed it again");
  store::SystemStore s;
  std::vector<std::string> ids;
  for (const auto& t : config.tasks) {
    s.register_task(t);
    ids.push_back(t.task_id);
  }
  store::DatasetRegistry datasets;
  auto seeded = train::seed_store(s, datasets, config.seed, ids);
  store::save_checkpoint(s, config.store_dir);
  out << "task\tpath\tvalidation\ttest\n";
  for (const auto& p : seeded)
    out << p.task_id << '\t' << p.path_id << '\t' << num(p.validation_accuracy) << '\t' << num(p.test_accuracy)
        << '\n';
  return seeded;
}

evo::AgentConfig effective_agent_config(const RunConfig& config, const EvolveOptions& options) {
  evo::AgentConfig a = config.agent;
  if (options.ablate) a.ablation = evo::parse_ablation(*options.ablate);
  if (options.force_support) a.forced_first_support = *options.force_support;
  if (options.cycles) a.cycles = *options.cycles;
  if (options.workers) a.workers = *options.workers;
  if (options.seed) a.seed = *options.seed;
  a.validate();
  return a;
}

std::string variant_name(const evo::AgentConfig& agent) {
  if (agent.ablation == evo::AblationMode::none) return kReference;
  return std::string(evo::ablation_name(agent.ablation));
}

EvolveOutcome cmd_evolve(const RunConfig& config, const EvolveOptions& options, std::ostream& out) {
  EvolveOutcome result;
  result.agent = effective_agent_config(config, options);
  const std::size_t replicas = options.replicas.value_or(config.replicas);
  if (replicas == 0) throw ConfigError("replicas must be positive");
  result.variant = options.variant.empty() ? variant_name(result.agent) : options.variant;
  if (!store::valid_id(result.variant)) throw ConfigError("invalid variant name '" + result.variant + "'");
  if (result.agent.model_prefix.empty()) result.agent.model_prefix = result.agent.target_task + "." + result.variant;

  const fs::path dir = fs::path(config.output_dir) / result.variant;
  result.variant_dir = dir.string();
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path) && !options.resume)
    throw ConfigError("'" + dir.string() + "' already holds a run; pass --resume or choose another --variant");

  const store::SystemStore seeded = open_store(config.store_dir);
  if (result.agent.forced_first_support && !seeded.has_path(*result.agent.forced_first_support))
    throw ConfigError("unknown support path '" + *result.agent.forced_first_support + "'");
  fs::create_directories(dir);

  RunConfig effective = config;
  effective.agent = result.agent;
  effective.replicas = replicas;
  const std::string config_text = run_config_to_json(effective).dump();
  if (options.resume && fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    const Json old = Json::parse(in);
    if (old.at("config") != run_config_to_json(effective))
      throw ConfigError("--resume: configuration differs from the one recorded in " + manifest_path.string());
  }
  Json manifest;
  manifest["variant"] = result.variant;
  manifest["config"] = run_config_to_json(effective);
  manifest["config_sha256"] = store::sha256_hex(std::vector<std::uint8_t>(config_text.begin(), config_text.end()));
  manifest["agent_seed"] = result.agent.seed;
  manifest["replica_seeds"] = Json::array();
  for (std::size_t r = 0; r < replicas; ++r) manifest["replica_seeds"].push_back(evo::replica_seed(result.agent.seed, r));
  manifest["versions"] = {{"mpath", kToolVersion},
                          {"checkpoint_format", store::kCheckpointVersion},
                          {"blob_format", store::kBlobVersion},
                          {"agent_state_format", 1},
                          {"compiler", __VERSION__}};
  write_text(manifest_path, manifest.dump(2) + "\n");

  store::DatasetRegistry datasets;
  evo::ReplicaOptions ro;
  ro.state_dir = (dir / "state").string();
  ro.resume = options.resume;
  ro.on_cycle = [&](std::size_t r, const evo::CycleReport& rep) {
    out << "replica " << r << " cycle " << rep.cycle << ": best validation " << fmt::format("{:.4f}", rep.best_validation)
        << ", test " << fmt::format("{:.4f}", rep.test_accuracy) << ", population " << rep.population_size << '\n';
  };
  result.replicas = evo::run_replicas(seeded, datasets, result.agent, replicas, ro);

  std::vector<std::vector<evo::CycleReport>> runs;
  Json per_replica = Json::array();
  std::vector<double> final_val, final_test, final_w, main_val, main_test;
  for (std::size_t r = 0; r < result.replicas.size(); ++r) {
    const auto& res = result.replicas[r];
    std::string tsv = std::string(evo::kCycleReportHeader) + kReplicaExtraHeader + "\n";
    for (const auto& rep : res.reports)
      tsv += evo::format_report_row(rep) + '\t' + num(res.main_validation) + '\t' + num(res.main_test) + '\n';
    write_text(dir / ("replica_" + std::to_string(r) + ".tsv"), tsv);
    runs.push_back(res.reports);
    const auto& last = res.reports.back();
    final_val.push_back(last.best_validation);
    final_test.push_back(last.test_accuracy);
    final_w.push_back(last.main_weight);
    main_val.push_back(res.main_validation);
    main_test.push_back(res.main_test);
    per_replica.push_back({{"replica", r},
                           {"seed", res.seed},
                           {"winner", last.winner_id},
                           {"best_validation", last.best_validation},
                           {"test_accuracy", last.test_accuracy},
                           {"main_weight", last.main_weight},
                           {"main_validation", res.main_validation},
                           {"main_test", res.main_test}});
  }
  std::string curve = std::string(evo::kCurveHeader) + "\n";
  for (const auto& row : evo::aggregate_curves(runs)) curve += evo::format_curve_row(row) + '\n';
  write_text(dir / "curve.tsv", curve);

  Json summary;
  summary["variant"] = result.variant;
  summary["replicas"] = per_replica;
  summary["best_validation"] = summary_to_json(evo::summarize(final_val));
  summary["test_accuracy"] = summary_to_json(evo::summarize(final_test));
  summary["main_weight"] = summary_to_json(evo::summarize(final_w));
  summary["main_path_validation"] = summary_to_json(evo::summarize(main_val));
  summary["main_path_test"] = summary_to_json(evo::summarize(main_test));
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  store::save_checkpoint(result.replicas.front().store, config.store_dir);
  out << "wrote " << dir.string() << '\n';
  return result;
}

double cmd_eval(const RunConfig& config, const std::string& id, data::Split split, std::ostream& out) {
  const store::SystemStore s = open_store(config.store_dir);
  store::DatasetRegistry datasets;
  store::RepresentationCache cache(s, datasets);
  train::TrainContext ctx{s, cache, datasets, 0};
  double acc = 0.0;
  if (s.has_model(id)) {
    acc = train::evaluate(arch::from_published(s, id), ctx, split);
  } else if (s.has_path(id)) {
    acc = train::evaluate_path(id, s.path(id).task_id, ctx, split);
  } else {
    throw StoreError("no published model or path named '" + id + "'");
  }
  out << id << '\t' << data::split_name(split) << '\t' << num(acc) << '\n';
  return acc;
}

VariantSummary read_variant(const std::string& output_dir, const std::string& variant) {
  VariantSummary v;
  v.variant = variant;
  const fs::path dir = fs::path(output_dir) / variant;
  const std::string header = std::string(evo::kCycleReportHeader) + kReplicaExtraHeader;
  for (std::size_t r = 0;; ++r) {
    const fs::path file = dir / ("replica_" + std::to_string(r) + ".tsv");
    if (!fs::exists(file)) break;
    std::ifstream in(file);
    std::string line, last;
    std::getline(in, line);
    if (line != header) throw FormatError(file.string() + ": unexpected header");
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    const auto f = split_tabs(last);
    if (f.size() != 9) throw FormatError(file.string() + ": expected 9 columns in the last row");
    v.validation.push_back(parse_double(f[2], file.string()));
    v.test.push_back(parse_double(f[3], file.string()));
    v.main_validation.push_back(parse_double(f[7], file.string()));
    v.main_test.push_back(parse_double(f[8], file.string()));
  }
  if (v.test.empty()) throw StoreError("no replica results under '" + dir.string() + "'");
  return v;
}

std::string format_comparison(const std::vector<VariantSummary>& variants) {
  if (variants.empty()) throw ValueError("format_comparison: no variants");
  const VariantSummary& ref = variants.front();
  std::vector<std::string> few;
  for (const auto& v : variants)
    if (v.test.size() < 2) few.push_back(v.variant);
  const bool with_p = few.empty();

  std::string s = fmt::format("{:<24} {:<20} {:<20} {:<8}", "variant", "validation", "test", "max");
  if (with_p) s += fmt::format(" {}", "p-value");
  s += '\n';
  auto row = [&](const std::string& name, const std::vector<double>& val, const std::vector<double>& test,
                 bool is_ref) {
    const auto sv = evo::summarize(val), st = evo::summarize(test);
    std::string line = fmt::format("{:<24} {:<20} {:<20} {:<8.4f}", name, cell(sv), cell(st), st.max);
    if (with_p) {
      if (is_ref) {
        line += " -";
      } else if (auto t = welch_t_test(ref.test, test)) {
        line += fmt::format(" {:.3g}", t->p_value);
      }
    }
    return line + '\n';
  };
  for (std::size_t i = 0; i < variants.size(); ++i)
    s += row(variants[i].variant, variants[i].validation, variants[i].test, i == 0);
  s += row("main path", ref.main_validation, ref.main_test, false);
  s += fmt::format("\nmean ± s.e.m. over replicas; max of test accuracy; ");
  if (with_p) {
    s += fmt::format("p-value: Welch two-sample t-test of test accuracy against '{}'\n", ref.variant);
  } else {
    std::string names;
    for (const auto& n : few) names += (names.empty() ? "" : ", ") + n;
    s += fmt::format("p-values omitted: fewer than 2 replicas in {}\n", names);
  }
  return s;
}

std::string cmd_report(const RunConfig& config, std::vector<std::string> variants, std::ostream& out) {
  if (variants.empty()) {
    if (fs::is_directory(config.output_dir))
      for (const auto& e : fs::directory_iterator(config.output_dir))
        if (fs::exists(e.path() / "replica_0.tsv")) variants.push_back(e.path().filename().string());
    std::sort(variants.begin(), variants.end(), [](const std::string& a, const std::string& b) {
      return std::make_pair(a != kReference, a) < std::make_pair(b != kReference, b);
    });
    if (variants.empty()) throw StoreError("no runs found under '" + config.output_dir + "'");
  }
  std::vector<VariantSummary> summaries;
  for (const auto& v : variants) summaries.push_back(read_variant(config.output_dir, v));
  const std::string text = format_comparison(summaries);
  fs::create_directories(config.output_dir);
  write_text(fs::path(config.output_dir) / "report.txt", text);
  write_text(fs::path(config.output_dir) / "system.dot", store::export_graph(open_store(config.store_dir)));
  out << text;
  return text;
}

}  // namespace mpath::cli

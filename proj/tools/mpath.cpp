#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mpath/cli/commands.hpp"
#include "mpath/data/preprocess.hpp"
#include "mpath/errors.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("mpath");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  const char* level = std::getenv("MPATH_VERBOSITY");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Multipath agent: seed a store, evolve multipath models, evaluate and report"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "run configuration (JSON)")->required();

  auto* seed = app.add_subcommand("seed", "train baseline paths and save them as a new store");

  mpath::cli::EvolveOptions evolve_opts;
  std::string ablate, force_support;
  std::size_t replicas = 0, cycles = 0, workers = 0;
  std::uint64_t seed_value = 0;
  auto* evolve = app.add_subcommand("evolve", "run the evolutionary agent over independent replicas");
  auto* ablate_opt = evolve->add_option("--ablate", ablate,
                                        "standard-aggregation|sum-aggregation|zero-bias-init|unit-lr-multiplier");
  auto* force_opt = evolve->add_option("--force-support", force_support, "path every genome must use first");
  auto* replicas_opt = evolve->add_option("--replicas", replicas, "number of independent runs")->check(CLI::PositiveNumber);
  auto* cycles_opt = evolve->add_option("--cycles", cycles, "cycles per run")->check(CLI::PositiveNumber);
  auto* workers_opt = evolve->add_option("--workers", workers, "models trained in parallel")->check(CLI::PositiveNumber);
  auto* seed_opt = evolve->add_option("--seed", seed_value, "base seed of the agent");
  evolve->add_option("--variant", evolve_opts.variant, "output subdirectory (default: from --ablate)");
  evolve->add_flag("--resume", evolve_opts.resume, "continue replicas from their saved state");

  std::string eval_id, split_name = "test";
  auto* eval = app.add_subcommand("eval", "accuracy of a published model or path");
  eval->add_option("id", eval_id, "model or path id")->required();
  eval->add_option("--split", split_name, "train|validation|test")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  std::vector<std::string> variants;
  auto* report = app.add_subcommand("report", "compare variants and write the system graph");
  report->add_option("variants", variants, "variants to compare; the first is the reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    const auto config = mpath::cli::load_run_config(config_path);
    if (*seed) {
      spdlog::info("seeding store at {}", config.store_dir);
      for (const auto& task : config.tasks)
        for (const auto& note : mpath::data::preprocess_notes(config.seed.preprocess, task.channels))
          spdlog::info("task {}: {}", task.task_id, note);
      mpath::cli::cmd_seed(config, std::cout);
    } else if (*evolve) {
      if (*ablate_opt) evolve_opts.ablate = ablate;
      if (*force_opt) evolve_opts.force_support = force_support;
      if (*replicas_opt) evolve_opts.replicas = replicas;
      if (*cycles_opt) evolve_opts.cycles = cycles;
      if (*workers_opt) evolve_opts.workers = workers;
      if (*seed_opt) evolve_opts.seed = seed_value;
      const auto outcome = mpath::cli::cmd_evolve(config, evolve_opts, std::cout);
      spdlog::info("variant '{}' finished {} replicas", outcome.variant, outcome.replicas.size());
    } else if (*eval) {
      mpath::cli::cmd_eval(config, eval_id, mpath::data::parse_split(split_name), std::cout);
    } else if (*report) {
      mpath::cli::cmd_report(config, variants, std::cout);
    }
  } catch (const mpath::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfigExit;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeExit;
  }
  return 0;
}

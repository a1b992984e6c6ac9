#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "ccfm/experiment.hpp"
#include "ccfm/oracle_suite.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ccfm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("CCFM_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Chance-constrained flow matching experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  bool wall_time = false;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out-dir", out_dir, "Directory for CSV, samples and figures")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for sampling")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--wall-time", wall_time, "Record wall time in the CSV (reruns then differ)");

  std::string config;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config, "Config file")->required();

  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "Run the oracle suite");
  verify->add_option("--only", only, "Criterion ids to run");
  std::string config_dir = CCFM_CONFIG_DIR;
  verify->add_option("--config-dir", config_dir, "Shipped benchmark configs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ccfm::kExitConfig;
  }

  if (*run) {
    ccfm::RunOptions opts;
    if (*seed_opt) opts.seed = seed;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.wall_time = wall_time;
    return ccfm::run_experiment(config, opts);
  }

  ccfm::SuiteOptions suite;
  suite.config_dir = config_dir;
  suite.scratch_dir = std::filesystem::path(out_dir) / "verify";
  suite.threads = std::max(2, threads);
  suite.only.insert(only.begin(), only.end());
  bool all = true;
  for (const auto& r : ccfm::run_acceptance_suite(suite)) {
    std::cout << ccfm::format_result(r) << std::endl;
    all = all && r.pass;
  }
  return all ? ccfm::kExitOk : ccfm::kExitNumerical;
}

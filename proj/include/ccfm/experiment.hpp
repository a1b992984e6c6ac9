#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccfm/pde_rd.hpp"
#include "ccfm/samplers.hpp"

namespace ccfm {

enum class ModelKind { gaussian_mixture, empirical, reaction_diffusion };

struct RdSettings {
  int n_s = 32;
  int n_t = 20;
  double t_final = 5.0;
  double nu = 0.005;
  double rho = 0.01;
  double delta = 1e-10;
  int train_ics = 10;     ///< training pool: train_ics x train_fluxes simulated fields
  int train_fluxes = 10;
};

/// One parsed constraint block: `[constraint:<name>]`.
struct ConstraintBlock {
  std::string name;
  std::string kind;
  Vec a;
  double b = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  Vec center;
  double radius = 0.0;
  std::vector<Eigen::Index> subset;
};

struct ExperimentConfig {
  std::filesystem::path source;  ///< config file, for resolving relative paths
  std::string id = "experiment";
  std::uint64_t seed = 0;

  ModelKind model = ModelKind::gaussian_mixture;
  Mat means;  ///< mixture means, one per row
  Vec scales;
  Vec weights;
  std::filesystem::path data;  ///< empirical atoms, one per row
  RdSettings rd;

  std::vector<ConstraintBlock> constraints;
  double tolerance = ConstraintSet::kDefaultTolerance;

  std::vector<Algorithm> algorithms{Algorithm::ccfm};
  SamplerConfig sampler;

  int reference_size = 2000;
  std::filesystem::path reference;  ///< optional reference batch file
  int sliced_projections = 128;

  std::string csv = "results.csv";
  bool write_samples = true;
  bool figures = true;
  int figure_trajectories = 16;
};

/// Parses an INI-style config. Unknown sections or keys, malformed numbers,
/// missing referenced files and inconsistent dimensions throw ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& source = {});

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "out";
  int threads = 1;
  bool wall_time = false;  ///< fill the wall_time column (breaks byte-identical reruns)
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct ResultRow {
  std::string experiment_id;
  std::string algorithm;
  int steps = 0;
  double scheduler_n = 0.0;
  std::uint64_t seed = 0;
  double feasibility_rate = 0.0;
  double sliced_w2 = 0.0;
  double mmse = 0.0;
  double smse = 0.0;
  double cv_ic = 0.0;
  double cv_cl = 0.0;
  double wall_time = 0.0;
};

extern const char* const kCsvHeader;
std::string format_csv(const std::vector<ResultRow>& rows);

struct AlgorithmRun {
  Algorithm algorithm;
  std::vector<SampleRecord> records;
  ResultRow row;
};

struct ExperimentResult {
  std::vector<AlgorithmRun> runs;
  /// Any constrained sample that failed or ended infeasible.
  bool numerical_failure = false;
};

/// Builds the model, constraints and reference, then runs every algorithm.
/// Build errors surface as ConfigError.
ExperimentResult execute(const ExperimentConfig& cfg, const RunOptions& opts);

/// The `run` subcommand: load, execute, write CSV / samples / figures.
/// Returns kExitOk, kExitConfig (nothing written) or kExitNumerical.
int run_experiment(const std::filesystem::path& config_path, const RunOptions& opts);

}  // namespace ccfm

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace ccfm {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::filesystem::path config_dir;   ///< shipped benchmark configs
  std::filesystem::path scratch_dir;  ///< determinism reruns write here
  int threads = 2;
  std::set<int> only;                 ///< empty runs every criterion
};

/// The ten acceptance criteria, each with its own oracle. Never throws for a
/// failing criterion; exceptions inside a check become FAIL with the message.
std::vector<CriterionResult> run_acceptance_suite(const SuiteOptions& opts);

/// "CRITERION <id>: PASS|FAIL <name> [<seconds>s] <detail>"
std::string format_result(const CriterionResult& r);

}  // namespace ccfm

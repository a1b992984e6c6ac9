#include <iostream>

#include "ccfm/oracle_suite.hpp"

int main(int argc, char** argv) {
  ccfm::SuiteOptions opts;
  opts.config_dir = CCFM_CONFIG_DIR;
  opts.scratch_dir = argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::path("acceptance_scratch");
  opts.threads = 2;
  int failed = 0;
  for (const auto& r : ccfm::run_acceptance_suite(opts)) {
    std::cout << ccfm::format_result(r) << std::endl;
    failed += !r.pass;
  }
  std::cout << (failed == 0 ? "ALL CRITERIA PASS" : std::to_string(failed) + " CRITERIA FAIL") << std::endl;
  return failed == 0 ? 0 : 1;
}

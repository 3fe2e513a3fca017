#pragma once

#include <string>
#include <vector>

#include "pairgrpo/config.hpp"

namespace pairgrpo::cli {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Suites run by `verify` when no --suite is given.
const std::vector<std::string>& default_suites();
/// default_suites() plus the slower replicated-statistics suites.
const std::vector<std::string>& known_suites();

/// Throws ConfigError for an unknown suite name.
SuiteResult run_suite(const std::string& name, const RunConfig& config);

}  // namespace pairgrpo::cli

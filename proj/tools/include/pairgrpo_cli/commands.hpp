#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "pairgrpo/config.hpp"

namespace pairgrpo::cli {

enum ExitCode : int {
  kOk = 0,
  kSuiteFailure = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
};

/// Command-line overrides. Precedence: defaults < config file < PAIRGRPO_*
/// environment < flags.
struct CommandOptions {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> jobs;
  bool fixed_delta = false;
  bool literal_clip = false;
  std::string out_dir = ".";
  std::string suite = "all";
};

/// Throws ConfigError.
RunConfig resolve_config(const CommandOptions& options);

// Each command writes manifest.txt into the output directory before any
// computation. Diagnostics go to `err`, results to `out`.
int run_verify(const RunConfig& config, const std::string& suite,
               const std::string& out_dir, std::ostream& out, std::ostream& err);
int run_train(const RunConfig& config, const std::string& out_dir,
              std::ostream& out, std::ostream& err);
int run_compare(const RunConfig& config, const std::string& out_dir,
                std::ostream& out, std::ostream& err);
int run_ablate(const RunConfig& config, const std::string& out_dir,
               std::ostream& out, std::ostream& err);

/// Re-executes the command recorded in a manifest, using its resolved config
/// verbatim (environment overrides are not applied).
int run_from_manifest(const std::string& manifest_path, const std::string& out_dir,
                      std::optional<int> jobs, std::ostream& out, std::ostream& err);

/// Maps exceptions to exit codes around a command body.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace pairgrpo::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pairgrpo/envs.hpp"
#include "pairgrpo/objectives.hpp"
#include "pairgrpo/rewards.hpp"
#include "pairgrpo/trainer.hpp"

namespace pairgrpo {

struct AnalysisSettings {
  std::size_t gradient_points = 100;
  std::size_t equivalence_pairs = 1000;
  std::size_t variance_samples = 10000;
  int replicates = 20;
  int monotonic_runs = 100;
  /// Epochs kept after delta_t first drops below the convergence threshold.
  int convergence_tail = 20;
  SigmaScope sigma_scope = SigmaScope::kPerGroup;
};

struct StepConfig {
  double delta0 = 0.02;
  double gamma_decay = 0.98;
  friend bool operator==(const StepConfig&, const StepConfig&) = default;
};

/// Everything a command needs; every field has a default, so an empty file
/// is a valid configuration.
struct RunConfig {
  TrainConfig train;
  int checkpoint_every = 0;
  bool record_wall_time = false;
  AnalysisSettings analysis;
  int compare_seeds = 10;
  int ablate_seeds = 10;
  std::vector<StepConfig> ablate_extra;
  int jobs = 1;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Prefix of environment variables that override config keys:
/// `hp.beta` <- PAIRGRPO_HP_BETA, `env.noise_std` <- PAIRGRPO_ENV_NOISE_STD.
inline constexpr const char* kEnvPrefix = "PAIRGRPO_";

std::string env_var_name(const std::string& key);

/// Applies one `section.key = value` assignment. Throws ConfigError.
void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value);

/// Parses flat `section.key = value` text ('#' starts a comment).
void apply_config_text(RunConfig& config, const std::string& text);

/// Reads a config file. Throws ConfigError if it cannot be read or parsed.
void apply_config_file(RunConfig& config, const std::string& path);

/// Applies PAIRGRPO_* environment overrides for every known key.
void apply_env_overrides(RunConfig& config);

/// All keys in canonical order with materialized values.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

/// config_entries rendered as parseable `key = value` lines.
std::string to_config_text(const RunConfig& config);

/// Shortest decimal rendering that parses back to the same double.
std::string format_double(double value);

}  // namespace pairgrpo

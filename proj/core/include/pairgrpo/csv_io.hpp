#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pairgrpo/analysis.hpp"
#include "pairgrpo/config.hpp"
#include "pairgrpo/policy.hpp"
#include "pairgrpo/trainer.hpp"

namespace pairgrpo {

// Column orders are fixed. Doubles use the shortest round-trip decimal form.
inline constexpr const char* kCheckpointHeader = "state,action,logit";
inline constexpr const char* kEpochsHeader =
    "epoch,loss_total,loss_fit_or_surrogate,kl_term,grad_norm,policy_kl,delta_t,J,wall_ms";
inline constexpr const char* kCompareHeader = "seed,method,epoch,J,loss_total";
inline constexpr const char* kStabilityHeader =
    "seed,method,final_J,grad_norm_variance,kl_std,oscillation";
inline constexpr const char* kAblateHeader =
    "config,delta0,gamma_decay,fixed_delta,n_seeds,final_J_median,oscillation_median";

/// Logits are written with 17 significant digits.
void write_checkpoint(std::ostream& out, const TabularPolicy& policy);
/// Every (state, action) must appear exactly once; rows may be in any order.
/// Throws std::runtime_error on malformed input.
TabularPolicy read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const TabularPolicy& policy);
TabularPolicy load_checkpoint(const std::string& path);

/// wall_ms is left empty unless with_wall_time is set, so that reruns stay
/// byte-identical.
void write_epochs_csv(std::ostream& out, const std::vector<EpochRecord>& records,
                      bool with_wall_time);

struct CompareRun {
  std::uint64_t seed = 0;
  Method method = Method::kSoftPair;
  double initial_return = 0.0;
  std::vector<EpochRecord> records;
  StabilityMetrics stability;
};

/// One epoch-0 row with the initial J per run, then one row per epoch.
void write_compare_csv(std::ostream& out, const std::vector<CompareRun>& runs);
/// Per-run rows, then per-method median rows with seed = "median".
void write_stability_csv(std::ostream& out, const std::vector<CompareRun>& runs);

struct AblateRow {
  std::string label;
  double delta0 = 0.0;
  double gamma_decay = 0.0;
  bool fixed_delta = false;
  int n_seeds = 0;
  double final_j_median = 0.0;
  double oscillation_median = 0.0;
};

void write_ablate_csv(std::ostream& out, const std::vector<AblateRow>& rows);

/// RFC 4180 quoting: fields containing ',', '"' or a newline are quoted.
std::string csv_field(const std::string& value);

/// Splits one CSV line, honouring quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

/// Provenance record written before any computation. Its text form is a valid
/// config file, so `--config manifest.txt` reproduces the run.
struct RunManifest {
  std::string command;
  RunConfig config;
  std::vector<std::string> artifacts;
  std::string tool_version;
  /// Subcommand options that are not config keys (e.g. the verify suite).
  std::vector<std::pair<std::string, std::string>> options;
};

std::string to_text(const RunManifest& manifest);
RunManifest parse_manifest(const std::string& text);
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace pairgrpo

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairgrpo/envs.hpp"
#include "pairgrpo/objectives.hpp"
#include "pairgrpo/policy.hpp"

namespace pairgrpo {

enum class Method { kGrpo, kSoftPair, kHardPair };

/// How Hard-Pair consumes a batch.
enum class HardUpdate {
  /// One descent step per pair on that pair's own total loss, in batch order.
  kPerPair,
  /// n_inner steps on the loss averaged over the whole batch.
  kBatch,
};

std::string_view to_string(Method method);
/// Accepts "grpo", "soft_pair", "hard_pair".
Method parse_method(std::string_view name);
std::string_view to_string(HardUpdate update);
/// Accepts "per_pair", "batch".
HardUpdate parse_hard_update(std::string_view name);

struct TrainConfig {
  Method method = Method::kSoftPair;
  int epochs = 30;
  int pairs_per_epoch = 64;
  /// Descent steps per epoch on the same batch.
  int n_inner = 1;
  /// Reference is synced after every `sync_every` epochs.
  int sync_every = 1;
  /// Hard-Pair only: keep delta_t = delta0 for every epoch.
  bool fixed_delta = false;
  HardUpdate hard_update = HardUpdate::kPerPair;
  HyperParams hp;
  EnvSpec env;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  /// 1-based, so the first Hard-Pair epoch uses delta0 * gamma.
  int epoch = 0;
  double loss_total = 0.0;
  double loss_fit_or_surrogate = 0.0;
  double kl_term = 0.0;
  double grad_norm = 0.0;
  /// KL(policy || reference) over the batch states after the update.
  double policy_kl = 0.0;
  std::optional<double> delta_t;
  double expected_return = 0.0;
  double wall_ms = 0.0;
  /// sum over states of || pi_new(.|s) - pi_old(.|s) ||_1
  double policy_l1_change = 0.0;
};

/// Owns the live policy and its frozen reference for one run.
class Trainer {
 public:
  Trainer(TrainConfig config, PreferenceBandit env, TabularPolicy initial);

  /// Samples a batch from the reference, takes n_inner descent steps and
  /// records metrics; syncs the reference on schedule. Throws NumericalError.
  EpochRecord run_epoch();

  /// reference <- policy (deep copy).
  void sync_reference();

  const TabularPolicy& policy() const noexcept { return policy_; }
  const TabularPolicy& reference() const noexcept { return reference_; }
  const PreferenceBandit& env() const noexcept { return env_; }
  int epochs_done() const noexcept { return epoch_; }

 private:
  LossReport evaluate(const std::vector<PreferencePair>& pairs,
                      const std::vector<GroupSample>& groups, double delta) const;

  TrainConfig config_;
  PreferenceBandit env_;
  TabularPolicy policy_;
  TabularPolicy reference_;
  int epoch_ = 0;
};

struct TrainResult {
  std::vector<EpochRecord> records;
  TabularPolicy final_policy;
  double initial_return = 0.0;
  /// Set when training stopped on a non-finite loss or gradient.
  std::optional<int> failed_epoch;
  std::string failure;
};

using EpochCallback = std::function<void(const EpochRecord&, const Trainer&)>;

/// Runs config.epochs epochs from the uniform policy.
TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Slack 2 * eps * gamma / (1 - gamma)^2 * beta of the PPO-style improvement
/// bound. Diagnostic only.
double monotonic_bound(double eps_clip, double gamma_discount, double beta);

}  // namespace pairgrpo

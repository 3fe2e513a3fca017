#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pairgrpo {

/// One prompt with K sampled responses and their reward-model scores.
struct GroupSample {
  std::size_t state = 0;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
};

/// (s, a_p, a_r): a_p is preferred over a_r in state s.
struct PreferencePair {
  std::size_t state = 0;
  std::size_t preferred = 0;
  std::size_t rejected = 0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

/// Throws std::invalid_argument on K < 2, non-finite rewards, out-of-range or
/// mismatched actions (num_actions == 0 skips the range check).
void validate_group(const GroupSample& group, std::size_t num_actions = 0);
void validate_pair(const PreferencePair& pair, std::size_t num_actions = 0);

double population_mean(std::span<const double> values);
/// Standard deviation with divisor K.
double population_sigma(std::span<const double> values);

/// (R_i - mean) / max(sigma, eps_sigma) with population sigma. An all-equal
/// group has a zero numerator and maps to zeros.
std::vector<double> group_normalize(std::span<const double> rewards,
                                    double eps_sigma = 1e-8);

/// +1 for the preferred action, -1 for the rejected one.
double soft_pair_reward(const PreferencePair& pair, std::size_t action);

/// A labelled pair together with the reward-model scores of both responses
/// and the sigma used to normalize them.
struct ScoredPair {
  PreferencePair pair;
  double reward_preferred = 0.0;
  double reward_rejected = 0.0;
  double sigma = 1.0;
};

struct ScalingConstant {
  double value = 0.0;
  /// Pairs whose reward-model scores do not favour the preferred response.
  std::size_t sign_inconsistent = 0;
  double sign_inconsistency_rate = 0.0;
};

/// C = mean over pairs of (R_p - R_r) / (2 sigma).
ScalingConstant scaling_constant(std::span<const ScoredPair> pairs);

/// Where the sigma inside C comes from.
enum class SigmaScope { kPerGroup, kBatch };

}  // namespace pairgrpo

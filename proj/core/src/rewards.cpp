#include "pairgrpo/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pairgrpo {

void validate_group(const GroupSample& group, std::size_t num_actions) {
  if (group.actions.size() < 2) {
    throw std::invalid_argument("GroupSample: K must be >= 2");
  }
  if (group.rewards.size() != group.actions.size()) {
    throw std::invalid_argument("GroupSample: actions/rewards length mismatch");
  }
  for (double r : group.rewards) {
    if (!std::isfinite(r)) throw std::invalid_argument("GroupSample: non-finite reward");
  }
  if (num_actions != 0) {
    for (std::size_t a : group.actions) {
      if (a >= num_actions) throw std::out_of_range("GroupSample: action out of range");
    }
  }
}

void validate_pair(const PreferencePair& pair, std::size_t num_actions) {
  if (pair.preferred == pair.rejected) {
    throw std::invalid_argument("PreferencePair: preferred == rejected");
  }
  if (num_actions != 0 &&
      (pair.preferred >= num_actions || pair.rejected >= num_actions)) {
    throw std::out_of_range("PreferencePair: action out of range");
  }
}

double population_mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("population_mean: empty input");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_sigma(std::span<const double> values) {
  const double mean = population_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

std::vector<double> group_normalize(std::span<const double> rewards,
                                    double eps_sigma) {
  if (rewards.size() < 2) throw std::invalid_argument("group_normalize: K must be >= 2");
  if (!(eps_sigma > 0.0)) throw std::invalid_argument("group_normalize: eps_sigma must be > 0");
  std::vector<double> out(rewards.size(), 0.0);
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  // Rounding in the mean would otherwise leave ~1e-16 / eps_sigma residue.
  if (*lo == *hi) return out;
  const double mean = population_mean(rewards);
  const double denom = std::max(population_sigma(rewards), eps_sigma);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / denom;
  }
  return out;
}

double soft_pair_reward(const PreferencePair& pair, std::size_t action) {
  if (action == pair.preferred) return 1.0;
  if (action == pair.rejected) return -1.0;
  throw std::invalid_argument("soft_pair_reward: action " + std::to_string(action) +
                              " is not part of the pair");
}

ScalingConstant scaling_constant(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("scaling_constant: no pairs");
  ScalingConstant out;
  double sum = 0.0;
  for (const ScoredPair& p : pairs) {
    if (!(p.sigma > 0.0)) {
      throw std::invalid_argument("scaling_constant: sigma must be > 0");
    }
    if (!(p.reward_preferred > p.reward_rejected)) ++out.sign_inconsistent;
    sum += (p.reward_preferred - p.reward_rejected) / (2.0 * p.sigma);
  }
  const double n = static_cast<double>(pairs.size());
  out.value = sum / n;
  out.sign_inconsistency_rate = static_cast<double>(out.sign_inconsistent) / n;
  return out;
}

}  // namespace pairgrpo

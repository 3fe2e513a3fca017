#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pairgrpo/policy.hpp"
#include "pairgrpo/rewards.hpp"
#include "pairgrpo/rng.hpp"

namespace pairgrpo {

/// Construction parameters for the synthetic preference bandit.
struct EnvSpec {
  std::size_t num_states = 8;
  std::size_t num_actions = 10;
  std::uint64_t seed = 0;
  double noise_std = 0.5;
  double reward_scale = 1.0;
  double reward_offset = 0.0;
  double label_temperature = 0.0;

  void validate() const;
};

/// Multi-prompt bandit with fixed true utilities. Preference labels come from
/// the utilities; scalar rewards come from a noisy affine reward model.
class PreferenceBandit {
 public:
  /// Utilities drawn once from a standard normal seeded by spec.seed.
  explicit PreferenceBandit(const EnvSpec& spec);
  PreferenceBandit(const EnvSpec& spec, std::vector<double> utilities);

  std::size_t num_states() const noexcept { return spec_.num_states; }
  std::size_t num_actions() const noexcept { return spec_.num_actions; }
  const EnvSpec& spec() const noexcept { return spec_; }

  double utility(std::size_t state, std::size_t action) const;
  const std::vector<double>& utilities() const noexcept { return utilities_; }

 private:
  EnvSpec spec_;
  std::vector<double> utilities_;
};

/// Draws one action from policy(.|state) by inverse CDF.
std::size_t sample_action(const TabularPolicy& policy, std::size_t state, Rng& rng);

/// Two distinct actions from policy(.|state), labelled by the preference oracle.
PreferencePair sample_pair(const PreferenceBandit& env,
                           const TabularPolicy& policy, std::size_t state,
                           Rng& rng);

double reward_model(const PreferenceBandit& env, std::size_t state,
                    std::size_t action, Rng& rng);

/// A labelled pair plus the K=2 group of reward-model scores for its two
/// responses, actions ordered {preferred, rejected}.
struct ScoredSample {
  PreferencePair pair;
  GroupSample group;
};

ScoredSample sample_scored_pair(const PreferenceBandit& env,
                                const TabularPolicy& policy, std::size_t state,
                                Rng& rng);

/// K = 2 goes through the pair path; larger K draws i.i.d. responses.
GroupSample sample_group(const PreferenceBandit& env, const TabularPolicy& policy,
                         std::size_t state, int group_size, Rng& rng);

/// Mean over states of sum_a pi(a|s) u[s, a].
double expected_return(const PreferenceBandit& env, const TabularPolicy& policy);

}  // namespace pairgrpo

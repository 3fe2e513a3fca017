#include "pairgrpo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "detail.hpp"
#include "pairgrpo/errors.hpp"

namespace pairgrpo {
namespace {

constexpr int kMaxPairAttempts = 1000;

void check_env_policy(const PreferenceBandit& env, const TabularPolicy& policy) {
  if (policy.num_states() != env.num_states() ||
      policy.num_actions() != env.num_actions()) {
    throw std::invalid_argument("policy shape does not match environment");
  }
}

}  // namespace

void EnvSpec::validate() const {
  if (num_states < 1) throw ConfigError("env.S", "must be >= 1");
  if (num_actions < 2) throw ConfigError("env.A", "must be >= 2");
  if (!(std::isfinite(noise_std) && noise_std >= 0.0)) {
    throw ConfigError("env.noise_std", "must be >= 0");
  }
  if (!(std::isfinite(reward_scale) && reward_scale > 0.0)) {
    throw ConfigError("env.reward_scale", "must be > 0");
  }
  if (!std::isfinite(reward_offset)) throw ConfigError("env.reward_offset", "must be finite");
  if (!(std::isfinite(label_temperature) && label_temperature >= 0.0)) {
    throw ConfigError("env.label_temperature", "must be >= 0");
  }
}

PreferenceBandit::PreferenceBandit(const EnvSpec& spec)
    : spec_(spec), utilities_(spec.num_states * spec.num_actions) {
  spec_.validate();
  Rng rng(spec.seed, StreamPurpose::kUtilities, 0);
  for (double& u : utilities_) u = rng.normal();
}

PreferenceBandit::PreferenceBandit(const EnvSpec& spec, std::vector<double> utilities)
    : spec_(spec), utilities_(std::move(utilities)) {
  spec_.validate();
  if (utilities_.size() != spec_.num_states * spec_.num_actions) {
    throw std::invalid_argument("PreferenceBandit: expected S*A utilities");
  }
  for (std::size_t s = 0; s < spec_.num_states; ++s) {
    const auto first = utilities_.begin() + static_cast<std::ptrdiff_t>(s * spec_.num_actions);
    const auto last = first + static_cast<std::ptrdiff_t>(spec_.num_actions);
    if (std::any_of(first, last, [](double u) { return !std::isfinite(u); })) {
      throw std::invalid_argument("PreferenceBandit: non-finite utility");
    }
    if (std::all_of(first, last, [&](double u) { return u == *first; })) {
      throw std::invalid_argument("PreferenceBandit: state " + std::to_string(s) +
                                  " has all-equal utilities");
    }
  }
}

double PreferenceBandit::utility(std::size_t state, std::size_t action) const {
  if (state >= spec_.num_states || action >= spec_.num_actions) {
    throw std::out_of_range("PreferenceBandit::utility: index out of range");
  }
  return utilities_[state * spec_.num_actions + action];
}

std::size_t sample_action(const TabularPolicy& policy, std::size_t state, Rng& rng) {
  const auto probs = detail::softmax(policy.row(state));
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    cumulative += probs[a];
    if (u < cumulative) return a;
  }
  // u landed in the rounding gap above the last partial sum
  for (std::size_t a = probs.size(); a-- > 0;) {
    if (probs[a] > 0.0) return a;
  }
  return probs.size() - 1;
}

PreferencePair sample_pair(const PreferenceBandit& env,
                           const TabularPolicy& policy, std::size_t state,
                           Rng& rng) {
  check_env_policy(env, policy);
  for (int attempt = 0; attempt < kMaxPairAttempts; ++attempt) {
    const std::size_t a = sample_action(policy, state, rng);
    const std::size_t b = sample_action(policy, state, rng);
    if (a == b) continue;

    const double gap = env.utility(state, a) - env.utility(state, b);
    const double temperature = env.spec().label_temperature;
    bool a_wins;
    if (temperature == 0.0) {
      a_wins = gap == 0.0 ? rng.uniform() < 0.5 : gap > 0.0;
    } else {
      const double p_a = 1.0 / (1.0 + std::exp(-gap / temperature));
      a_wins = rng.uniform() < p_a;
    }
    return a_wins ? PreferencePair{state, a, b} : PreferencePair{state, b, a};
  }
  throw SamplingError("sample_pair: no distinct pair after " +
                      std::to_string(kMaxPairAttempts) + " attempts in state " +
                      std::to_string(state));
}

double reward_model(const PreferenceBandit& env, std::size_t state,
                    std::size_t action, Rng& rng) {
  const EnvSpec& spec = env.spec();
  const double noise = rng.normal();
  return spec.reward_scale * env.utility(state, action) + spec.reward_offset +
         spec.noise_std * noise;
}

ScoredSample sample_scored_pair(const PreferenceBandit& env,
                                const TabularPolicy& policy, std::size_t state,
                                Rng& rng) {
  ScoredSample out;
  out.pair = sample_pair(env, policy, state, rng);
  out.group.state = state;
  out.group.actions = {out.pair.preferred, out.pair.rejected};
  out.group.rewards = {reward_model(env, state, out.pair.preferred, rng),
                       reward_model(env, state, out.pair.rejected, rng)};
  return out;
}

GroupSample sample_group(const PreferenceBandit& env, const TabularPolicy& policy,
                         std::size_t state, int group_size, Rng& rng) {
  if (group_size < 2) throw std::invalid_argument("sample_group: K must be >= 2");
  if (group_size == 2) return sample_scored_pair(env, policy, state, rng).group;
  check_env_policy(env, policy);
  GroupSample group;
  group.state = state;
  for (int i = 0; i < group_size; ++i) {
    const std::size_t a = sample_action(policy, state, rng);
    group.actions.push_back(a);
    group.rewards.push_back(reward_model(env, state, a, rng));
  }
  return group;
}

double expected_return(const PreferenceBandit& env, const TabularPolicy& policy) {
  check_env_policy(env, policy);
  double total = 0.0;
  for (std::size_t s = 0; s < env.num_states(); ++s) {
    const auto probs = detail::softmax(policy.row(s));
    double value = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) value += probs[a] * env.utility(s, a);
    total += value;
  }
  return total / static_cast<double>(env.num_states());
}

}  // namespace pairgrpo

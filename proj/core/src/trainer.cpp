#include "pairgrpo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "detail.hpp"
#include "pairgrpo/errors.hpp"

namespace pairgrpo {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kGrpo: return "grpo";
    case Method::kSoftPair: return "soft_pair";
    case Method::kHardPair: return "hard_pair";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "grpo") return Method::kGrpo;
  if (name == "soft_pair") return Method::kSoftPair;
  if (name == "hard_pair") return Method::kHardPair;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected grpo, soft_pair or hard_pair)");
}

std::string_view to_string(HardUpdate update) {
  return update == HardUpdate::kPerPair ? "per_pair" : "batch";
}

HardUpdate parse_hard_update(std::string_view name) {
  if (name == "per_pair") return HardUpdate::kPerPair;
  if (name == "batch") return HardUpdate::kBatch;
  throw std::invalid_argument("unknown hard-pair update '" + std::string(name) +
                              "' (expected per_pair or batch)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs", "must be >= 1");
  if (pairs_per_epoch < 1) throw ConfigError("train.pairs_per_epoch", "must be >= 1");
  if (n_inner < 1) throw ConfigError("train.n_inner", "must be >= 1");
  if (sync_every < 1) throw ConfigError("train.sync_every", "must be >= 1");
  hp.validate();
  env.validate();
}

Trainer::Trainer(TrainConfig config, PreferenceBandit env, TabularPolicy initial)
    : config_(std::move(config)),
      env_(std::move(env)),
      policy_(std::move(initial)),
      reference_(policy_) {
  config_.validate();
  if (policy_.num_states() != env_.num_states() ||
      policy_.num_actions() != env_.num_actions()) {
    throw std::invalid_argument("Trainer: policy shape does not match environment");
  }
}

void Trainer::sync_reference() { reference_ = policy_; }

LossReport Trainer::evaluate(const std::vector<PreferencePair>& pairs,
                             const std::vector<GroupSample>& groups,
                             double delta) const {
  switch (config_.method) {
    case Method::kGrpo: return grpo_loss(policy_, reference_, groups, config_.hp);
    case Method::kSoftPair: return soft_pair_loss(policy_, reference_, pairs, config_.hp);
    case Method::kHardPair:
      return hard_pair_total_loss(policy_, reference_, pairs, delta, config_.hp);
  }
  throw std::logic_error("unreachable");
}

EpochRecord Trainer::run_epoch() {
  const auto started = std::chrono::steady_clock::now();
  const int t = ++epoch_;
  EpochRecord record;
  record.epoch = t;

  // Batch collection from the frozen reference. Every pair owns its own
  // stream so batches line up across methods that consume different draws.
  std::vector<PreferencePair> pairs;
  std::vector<GroupSample> groups;
  std::vector<std::size_t> states;
  try {
    for (int i = 0; i < config_.pairs_per_epoch; ++i) {
      Rng rng(config_.seed, StreamPurpose::kTrainBatch,
              (static_cast<std::uint64_t>(t) << 24) | static_cast<std::uint64_t>(i));
      const std::size_t s = rng.below(env_.num_states());
      states.push_back(s);
      if (config_.method == Method::kGrpo) {
        groups.push_back(sample_group(env_, reference_, s, config_.hp.group_size, rng));
      } else {
        pairs.push_back(sample_pair(env_, reference_, s, rng));
      }
    }
  } catch (const SamplingError& e) {
    // A reference collapsed onto one action is a diverged run.
    throw NumericalError(t, std::string("policy collapsed at epoch ") + std::to_string(t) +
                                ": " + e.what());
  }

  double delta = 0.0;
  if (config_.method == Method::kHardPair) {
    delta = config_.fixed_delta ? config_.hp.delta0 : step_size(config_.hp, t);
    record.delta_t = delta;
  }

  auto check = [t](const LossReport& loss, const char* where) {
    if (!std::isfinite(loss.total) || !loss.gradient.all_finite()) {
      throw NumericalError(t, std::string("non-finite loss or gradient at epoch ") +
                                  std::to_string(t) + " (" + where + ")");
    }
  };

  const TabularPolicy before = policy_;
  // Metrics always describe the batch loss at the start of the epoch.
  LossReport loss = evaluate(pairs, groups, delta);
  check(loss, "batch");
  record.loss_total = loss.total;
  record.loss_fit_or_surrogate = loss.surrogate_or_fit;
  record.kl_term = loss.kl_term;
  record.grad_norm = loss.gradient.norm();

  if (config_.method == Method::kHardPair &&
      config_.hard_update == HardUpdate::kPerPair) {
    for (const PreferencePair& pair : pairs) {
      for (int step = 0; step < config_.n_inner; ++step) {
        const LossReport single = hard_pair_total_loss(
            policy_, reference_, std::span<const PreferencePair>(&pair, 1), delta,
            config_.hp);
        check(single, "pair update");
        policy_.descend(single.gradient, config_.hp.eta);
      }
    }
  } else {
    for (int step = 0; step < config_.n_inner; ++step) {
      if (step > 0) {
        loss = evaluate(pairs, groups, delta);
        check(loss, "inner step");
      }
      policy_.descend(loss.gradient, config_.hp.eta);
    }
  }

  for (double v : policy_.logits()) {
    if (!std::isfinite(v)) {
      throw NumericalError(t, "non-finite logits after update at epoch " + std::to_string(t));
    }
  }

  record.policy_kl = policy_kl(policy_, reference_, unique_states(states));
  record.expected_return = expected_return(env_, policy_);
  for (std::size_t s = 0; s < policy_.num_states(); ++s) {
    const auto now = detail::softmax(policy_.row(s));
    const auto old = detail::softmax(before.row(s));
    for (std::size_t a = 0; a < now.size(); ++a) record.policy_l1_change += std::abs(now[a] - old[a]);
  }
  if (!std::isfinite(record.policy_kl) || !std::isfinite(record.expected_return)) {
    throw NumericalError(t, "non-finite metrics at epoch " + std::to_string(t));
  }

  if (t % config_.sync_every == 0) sync_reference();
  record.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started)
                       .count();
  return record;
}

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  PreferenceBandit env(config.env);
  TabularPolicy initial(env.num_states(), env.num_actions());
  Trainer trainer(config, env, initial);

  TrainResult result{.records = {},
                     .final_policy = initial,
                     .initial_return = expected_return(env, initial),
                     .failed_epoch = std::nullopt,
                     .failure = {}};
  result.records.reserve(static_cast<std::size_t>(config.epochs));
  for (int t = 0; t < config.epochs; ++t) {
    try {
      result.records.push_back(trainer.run_epoch());
    } catch (const NumericalError& e) {
      result.failed_epoch = e.epoch();
      result.failure = e.what();
      break;
    }
    if (on_epoch) on_epoch(result.records.back(), trainer);
  }
  result.final_policy = trainer.policy();
  return result;
}

double monotonic_bound(double eps_clip, double gamma_discount, double beta) {
  if (!(gamma_discount > 0.0 && gamma_discount < 1.0)) {
    throw std::invalid_argument("monotonic_bound: gamma must lie in (0, 1)");
  }
  const double one_minus = 1.0 - gamma_discount;
  return 2.0 * eps_clip * gamma_discount / (one_minus * one_minus) * beta;
}

}  // namespace pairgrpo

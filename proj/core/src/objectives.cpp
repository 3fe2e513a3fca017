#include "pairgrpo/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "detail.hpp"
#include "pairgrpo/errors.hpp"

namespace pairgrpo {

void HyperParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!(eps_clip > 0.0 && eps_clip < 1.0)) throw ConfigError("hp.eps_clip", "must lie in (0, 1)");
  if (!positive(beta)) throw ConfigError("hp.beta", "must be > 0");
  if (!(std::isfinite(alpha) && alpha >= 0.0)) throw ConfigError("hp.alpha", "must be >= 0");
  if (!(delta0 > 0.0 && delta0 < 1.0)) throw ConfigError("hp.delta0", "must lie in (0, 1)");
  if (!(gamma_decay > 0.0 && gamma_decay < 1.0)) {
    throw ConfigError("hp.gamma_decay", "must lie in (0, 1)");
  }
  if (!positive(eta)) throw ConfigError("hp.eta", "must be > 0");
  if (group_size < 2) throw ConfigError("hp.K", "must be >= 2");
  if (!(p_min > 0.0 && p_min <= 1e-6)) throw ConfigError("hp.p_min", "must lie in (0, 1e-6]");
  if (!positive(eps_sigma)) throw ConfigError("hp.eps_sigma", "must be > 0");
}

double clip(double value, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clip: lo > hi");
  return std::min(std::max(value, lo), hi);
}

LossReport clipped_surrogate_loss(const TabularPolicy& policy,
                                  const TabularPolicy& reference,
                                  std::span<const SurrogateTerm> terms,
                                  const HyperParams& hp) {
  detail::require_same_shape(policy, reference);
  if (terms.empty()) throw std::invalid_argument("surrogate loss: empty batch");

  const double lo = 1.0 - hp.eps_clip;
  const double hi = 1.0 + hp.eps_clip;
  const double weight = 1.0 / static_cast<double>(terms.size());
  const std::size_t num_actions = policy.num_actions();

  LossReport report;
  report.gradient = GradientVector(policy.num_params());
  std::vector<std::size_t> states;
  states.reserve(terms.size());

  double objective = 0.0;
  for (const SurrogateTerm& term : terms) {
    const std::size_t base = policy.flat_index(term.state, term.action) - term.action;
    states.push_back(term.state);
    const auto lp = detail::log_softmax(policy.row(term.state));
    const double ref_lp = detail::log_softmax(reference.row(term.state))[term.action];
    const double rho = std::exp(lp[term.action] - ref_lp);
    const double adv = term.advantage;

    double value;
    bool differentiable;  // true when the unclipped branch rho * adv is selected
    if (hp.clip_mode == ClipMode::kRatio) {
      value = std::min(rho * adv, clip(rho, lo, hi) * adv);
      differentiable = adv > 0.0 ? rho <= hi : (adv < 0.0 ? rho >= lo : false);
    } else {
      const double product = rho * adv;
      value = std::min(product, clip(product, lo, hi));
      differentiable = product <= hi && adv != 0.0;
    }
    objective += weight * value;

    if (differentiable) {
      // d(rho * adv) = adv * rho * d log pi(a|s); the loss is the negated mean.
      const double coeff = -weight * adv * rho;
      for (std::size_t b = 0; b < num_actions; ++b) {
        const double indicator = b == term.action ? 1.0 : 0.0;
        report.gradient[base + b] += coeff * (indicator - std::exp(lp[b]));
      }
    }
  }

  const auto batch_states = unique_states(states);
  report.surrogate_or_fit = -objective;
  report.kl_term = hp.beta * policy_kl(policy, reference, batch_states);
  report.total = report.surrogate_or_fit + report.kl_term;
  report.gradient.axpy(hp.beta, policy_kl_grad(policy, reference, batch_states));
  return report;
}

LossReport grpo_loss(const TabularPolicy& policy, const TabularPolicy& reference,
                     std::span<const GroupSample> groups, const HyperParams& hp) {
  if (groups.empty()) throw std::invalid_argument("grpo_loss: no groups");
  std::vector<SurrogateTerm> terms;
  for (const GroupSample& group : groups) {
    validate_group(group, policy.num_actions());
    const auto advantages = group_normalize(group.rewards, hp.eps_sigma);
    for (std::size_t i = 0; i < group.actions.size(); ++i) {
      terms.push_back({group.state, group.actions[i], advantages[i]});
    }
  }
  return clipped_surrogate_loss(policy, reference, terms, hp);
}

LossReport soft_pair_loss(const TabularPolicy& policy,
                          const TabularPolicy& reference,
                          std::span<const PreferencePair> pairs,
                          const HyperParams& hp) {
  if (pairs.empty()) throw std::invalid_argument("soft_pair_loss: no pairs");
  std::vector<SurrogateTerm> terms;
  terms.reserve(2 * pairs.size());
  for (const PreferencePair& pair : pairs) {
    validate_pair(pair, policy.num_actions());
    terms.push_back({pair.state, pair.preferred, soft_pair_reward(pair, pair.preferred)});
    terms.push_back({pair.state, pair.rejected, soft_pair_reward(pair, pair.rejected)});
  }
  return clipped_surrogate_loss(policy, reference, terms, hp);
}

double step_size(const HyperParams& hp, int epoch) {
  if (epoch < 0) throw std::invalid_argument("step_size: epoch must be >= 0");
  return hp.delta0 * std::pow(hp.gamma_decay, epoch);
}

Distribution build_target(const Distribution& reference,
                          const PreferencePair& pair, double delta,
                          double p_min) {
  validate_pair(pair, reference.size());
  const double ref_p = reference[pair.preferred];
  const double ref_r = reference[pair.rejected];
  const double room_rejected = ref_r - p_min;
  const double room_preferred = 1.0 - p_min - ref_p;
  const double shift =
      std::max(0.0, std::min({delta, room_rejected, room_preferred}));

  std::vector<double> target(reference.probs().begin(), reference.probs().end());
  if (shift == 0.0) return Distribution(std::move(target));
  target[pair.preferred] = ref_p + shift;
  // Pin the floor exactly rather than through ref_r - (ref_r - p_min).
  target[pair.rejected] = shift == room_rejected ? p_min : ref_r - shift;
  return Distribution(std::move(target));
}

LossReport kl_fit_loss(const TabularPolicy& policy,
                       std::span<const StateTarget> targets, double p_min) {
  if (targets.empty()) throw std::invalid_argument("kl_fit_loss: no targets");
  // Policy mass above this is treated as non-negligible.
  const double negligible = std::sqrt(p_min);
  const double weight = 1.0 / static_cast<double>(targets.size());
  const std::size_t num_actions = policy.num_actions();

  LossReport report;
  report.gradient = GradientVector(policy.num_params());
  double fit = 0.0;
  for (const StateTarget& entry : targets) {
    if (entry.target.size() != num_actions) {
      throw std::invalid_argument("kl_fit_loss: target length != A");
    }
    const std::size_t base = policy.flat_index(entry.state, 0);
    const auto lp = detail::log_softmax(policy.row(entry.state));
    std::vector<double> log_ratio(num_actions);
    double kl = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a) {
      const double p = std::exp(lp[a]);
      const double q = entry.target[a];
      if (q <= 0.0 || (q < p_min && p > negligible)) {
        throw DivergenceError("kl_fit_loss: target[" + std::to_string(a) +
                              "] = " + std::to_string(q) + " below floor in state " +
                              std::to_string(entry.state));
      }
      log_ratio[a] = lp[a] - std::log(q);
      kl += p * log_ratio[a];
    }
    fit += weight * std::max(kl, 0.0);
    for (std::size_t a = 0; a < num_actions; ++a) {
      report.gradient[base + a] += weight * std::exp(lp[a]) * (log_ratio[a] - kl);
    }
  }
  report.surrogate_or_fit = fit;
  report.kl_term = 0.0;
  report.total = fit;
  return report;
}

double hinge_penalty(double d_kl, const HyperParams& hp) {
  return hp.alpha * std::max(d_kl - hp.beta, 0.0);
}

LossReport hard_pair_total_loss(const TabularPolicy& policy,
                                const TabularPolicy& reference,
                                std::span<const PreferencePair> pairs,
                                double delta, const HyperParams& hp) {
  detail::require_same_shape(policy, reference);
  if (pairs.empty()) throw std::invalid_argument("hard_pair_total_loss: no pairs");

  std::vector<StateTarget> targets;
  std::vector<std::size_t> states;
  targets.reserve(pairs.size());
  for (const PreferencePair& pair : pairs) {
    validate_pair(pair, policy.num_actions());
    targets.push_back({pair.state, build_target(action_probs(reference, pair.state),
                                                pair, delta, hp.p_min)});
    states.push_back(pair.state);
  }

  LossReport report = kl_fit_loss(policy, targets, hp.p_min);
  const auto batch_states = unique_states(states);
  const double d_kl = policy_kl(policy, reference, batch_states);
  report.kl_term = hinge_penalty(d_kl, hp);
  report.total = report.surrogate_or_fit + report.kl_term;
  if (d_kl > hp.beta && hp.alpha > 0.0) {
    report.gradient.axpy(hp.alpha, policy_kl_grad(policy, reference, batch_states));
  }
  return report;
}

}  // namespace pairgrpo

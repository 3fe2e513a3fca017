#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pairgrpo/policy.hpp"
#include "pairgrpo/rewards.hpp"

namespace pairgrpo {

/// How the surrogate is clipped.
enum class ClipMode {
  /// min(rho * r, clip(rho, 1-eps, 1+eps) * r), the PPO form.
  kRatio,
  /// min(rho * r, clip(rho * r, 1-eps, 1+eps)), the product form as written
  /// in the original objective. Kept for comparison.
  kLiteralProduct,
};

struct HyperParams {
  double eps_clip = 0.2;
  /// Trust-region KL threshold (nats); also the KL-penalty weight.
  double beta = 0.01;
  double alpha = 0.5;
  double delta0 = 0.02;
  double gamma_decay = 0.98;
  double eta = 0.1;
  int group_size = 2;
  double p_min = 1e-8;
  double eps_sigma = 1e-8;
  ClipMode clip_mode = ClipMode::kRatio;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct LossReport {
  double total = 0.0;
  double surrogate_or_fit = 0.0;
  /// KL penalty (GRPO / Soft) or hinge penalty (Hard).
  double kl_term = 0.0;
  GradientVector gradient;
};

/// min(max(value, lo), hi); throws if lo > hi.
double clip(double value, double lo, double hi);

/// One advantage-weighted response inside a clipped surrogate.
struct SurrogateTerm {
  std::size_t state = 0;
  std::size_t action = 0;
  double advantage = 0.0;
};

/// -mean(clipped terms) + beta * policy_kl over the batch states.
LossReport clipped_surrogate_loss(const TabularPolicy& policy,
                                  const TabularPolicy& reference,
                                  std::span<const SurrogateTerm> terms,
                                  const HyperParams& hp);

LossReport grpo_loss(const TabularPolicy& policy, const TabularPolicy& reference,
                     std::span<const GroupSample> groups, const HyperParams& hp);

LossReport soft_pair_loss(const TabularPolicy& policy,
                          const TabularPolicy& reference,
                          std::span<const PreferencePair> pairs,
                          const HyperParams& hp);

/// delta_t = delta0 * gamma_decay^t.
double step_size(const HyperParams& hp, int epoch);

/// Moves up to `delta` probability mass from the rejected to the preferred
/// response; every other entry is copied from `reference`.
Distribution build_target(const Distribution& reference,
                          const PreferencePair& pair, double delta,
                          double p_min);

struct StateTarget {
  std::size_t state = 0;
  Distribution target;
};

/// Mean over entries of KL(policy(.|s) || target_s). Targets below p_min where
/// the policy still has non-negligible mass raise DivergenceError.
LossReport kl_fit_loss(const TabularPolicy& policy,
                       std::span<const StateTarget> targets,
                       double p_min = 1e-8);

/// alpha * max(d_kl - beta, 0)
double hinge_penalty(double d_kl, const HyperParams& hp);

/// kl_fit_loss against per-pair targets built from the reference, plus the
/// hinge penalty on policy_kl(policy, reference). The hinge contributes no
/// gradient at d_kl == beta.
LossReport hard_pair_total_loss(const TabularPolicy& policy,
                                const TabularPolicy& reference,
                                std::span<const PreferencePair> pairs,
                                double delta, const HyperParams& hp);

}  // namespace pairgrpo

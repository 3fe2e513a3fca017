#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairgrpo/envs.hpp"
#include "pairgrpo/objectives.hpp"
#include "pairgrpo/policy.hpp"
#include "pairgrpo/rewards.hpp"
#include "pairgrpo/trainer.hpp"

namespace pairgrpo {

struct EquivalenceReport {
  double cosine = 0.0;
  /// ||grad GRPO|| / ||grad Soft||
  double norm_ratio = 0.0;
  double c_formula = 0.0;
  double sign_inconsistency_rate = 0.0;
  std::size_t n_pairs = 0;
};

/// Compares batch gradients of grpo_loss and soft_pair_loss at
/// policy == reference on the same sampled pairs (K = 2 groups).
/// Throws DegenerateBatchError if either gradient vanishes.
EquivalenceReport gradient_equivalence_check(
    const TabularPolicy& policy, const PreferenceBandit& env, std::size_t n_pairs,
    std::uint64_t seed, const HyperParams& hp = {},
    SigmaScope sigma_scope = SigmaScope::kPerGroup);

/// Single-pair gradient split g = g_p - g_r into the preferred-response and
/// (negated) rejected-response contributions.
struct PairGradient {
  GradientVector preferred;
  GradientVector rejected;
  GradientVector total() const { return preferred - rejected; }
};

/// Pair split at policy == reference for each method. `advantages` is the
/// {preferred, rejected} advantage pair for GRPO; `delta` the Hard-Pair shift.
PairGradient surrogate_pair_gradient(const TabularPolicy& policy,
                                     const PreferencePair& pair,
                                     double adv_preferred, double adv_rejected);
PairGradient hard_pair_gradient(const TabularPolicy& policy,
                                const PreferencePair& pair, double delta,
                                double p_min);

struct GradientStats {
  GradientVector mean;
  GradientVector per_coord_variance;
  double trace_variance = 0.0;
  double relative_variance = 0.0;
  /// Trace of Var(g_p), Var(g_r) and Cov(g_p, g_r).
  double var_p_trace = 0.0;
  double var_r_trace = 0.0;
  double cov_pr_trace = 0.0;
  std::size_t n_samples = 0;

  /// |trace - (var_p + var_r - 2 cov)| / trace
  double decomposition_residual() const;
};

/// n_samples independent single-pair gradients at policy == reference.
/// Sample i draws from its own stream, so the three methods see identical
/// pairs for a given seed. Variances use divisor n - 1.
GradientStats variance_estimate(Method method, const TabularPolicy& policy,
                                const PreferenceBandit& env, std::size_t n_samples,
                                double delta, std::uint64_t seed,
                                const HyperParams& hp = {});

struct HierarchyReport {
  GradientStats grpo;
  GradientStats soft;
  GradientStats hard;
  bool soft_below_grpo = false;
  bool hard_not_above_soft = false;
  bool strict_hierarchy = false;
  std::string summary() const;
};

HierarchyReport variance_hierarchy(const TabularPolicy& policy,
                                   const PreferenceBandit& env, std::size_t n_samples,
                                   double delta, std::uint64_t seed,
                                   const HyperParams& hp = {});

struct StabilityMetrics {
  double grad_norm_variance = 0.0;
  double kl_std = 0.0;
  /// Standard deviation of consecutive loss_total differences.
  double oscillation = 0.0;
};

/// Population statistics over the epoch series; needs >= 2 records.
StabilityMetrics stability_metrics(std::span<const EpochRecord> records);

/// Median of a non-empty sample (mean of the middle two for even sizes).
double median(std::vector<double> values);

double cosine_similarity(const GradientVector& a, const GradientVector& b);

}  // namespace pairgrpo

#include "pairgrpo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "detail.hpp"
#include "pairgrpo/errors.hpp"

namespace pairgrpo {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double cosine_similarity(const GradientVector& a, const GradientVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw DegenerateBatchError("cosine_similarity: zero vector");
  }
  return a.dot(b) / (na * nb);
}

EquivalenceReport gradient_equivalence_check(const TabularPolicy& policy,
                                             const PreferenceBandit& env,
                                             std::size_t n_pairs, std::uint64_t seed,
                                             const HyperParams& hp,
                                             SigmaScope sigma_scope) {
  if (n_pairs < 1) throw std::invalid_argument("gradient_equivalence_check: n_pairs must be >= 1");

  std::vector<PreferencePair> pairs;
  std::vector<GroupSample> groups;
  pairs.reserve(n_pairs);
  groups.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    Rng rng(seed, StreamPurpose::kEquivalence, i);
    const std::size_t s = rng.below(env.num_states());
    ScoredSample sample = sample_scored_pair(env, policy, s, rng);
    pairs.push_back(sample.pair);
    groups.push_back(std::move(sample.group));
  }

  double batch_sigma = 0.0;
  if (sigma_scope == SigmaScope::kBatch) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.rewards.begin(), g.rewards.end());
    batch_sigma = population_sigma(all);
  }
  std::vector<ScoredPair> scored;
  scored.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto& rewards = groups[i].rewards;
    const double sigma = sigma_scope == SigmaScope::kPerGroup
                             ? std::max(population_sigma(rewards), hp.eps_sigma)
                             : batch_sigma;
    scored.push_back({pairs[i], rewards[0], rewards[1], sigma});
  }

  // At policy == reference both KL penalties and their gradients vanish, so
  // the full loss gradients are the surrogate gradients.
  const GradientVector g_grpo = grpo_loss(policy, policy, groups, hp).gradient;
  const GradientVector g_soft = soft_pair_loss(policy, policy, pairs, hp).gradient;
  if (g_grpo.norm() == 0.0 || g_soft.norm() == 0.0) {
    throw DegenerateBatchError("gradient_equivalence_check: zero batch gradient");
  }

  const ScalingConstant c = scaling_constant(scored);
  EquivalenceReport report;
  report.cosine = cosine_similarity(g_grpo, g_soft);
  report.norm_ratio = g_grpo.norm() / g_soft.norm();
  report.c_formula = c.value;
  report.sign_inconsistency_rate = c.sign_inconsistency_rate;
  report.n_pairs = n_pairs;
  return report;
}

PairGradient surrogate_pair_gradient(const TabularPolicy& policy,
                                     const PreferencePair& pair,
                                     double adv_preferred, double adv_rejected) {
  validate_pair(pair, policy.num_actions());
  // Each response is one of two terms in the mean; rho = 1 at the reference.
  PairGradient out{.preferred = log_prob_grad(policy, pair.state, pair.preferred),
                   .rejected = log_prob_grad(policy, pair.state, pair.rejected)};
  out.preferred *= -0.5 * adv_preferred;
  out.rejected *= 0.5 * adv_rejected;
  return out;
}

PairGradient hard_pair_gradient(const TabularPolicy& policy,
                                const PreferencePair& pair, double delta,
                                double p_min) {
  validate_pair(pair, policy.num_actions());
  const Distribution probs = action_probs(policy, pair.state);
  const Distribution target = build_target(probs, pair, delta, p_min);
  const auto lp = detail::log_softmax(policy.row(pair.state));
  const double l_p = lp[pair.preferred] - std::log(target[pair.preferred]);
  const double l_r = lp[pair.rejected] - std::log(target[pair.rejected]);
  // grad KL(pi || target) = sum_a log(pi_a / target_a) grad pi_a, and only the
  // two pair coordinates carry a non-zero log ratio.
  PairGradient out{.preferred = log_prob_grad(policy, pair.state, pair.preferred),
                   .rejected = log_prob_grad(policy, pair.state, pair.rejected)};
  out.preferred *= l_p * probs[pair.preferred];
  out.rejected *= -l_r * probs[pair.rejected];
  return out;
}

double GradientStats::decomposition_residual() const {
  const double rebuilt = var_p_trace + var_r_trace - 2.0 * cov_pr_trace;
  if (trace_variance == 0.0) return std::abs(rebuilt);
  return std::abs(trace_variance - rebuilt) / trace_variance;
}

GradientStats variance_estimate(Method method, const TabularPolicy& policy,
                                const PreferenceBandit& env, std::size_t n_samples,
                                double delta, std::uint64_t seed,
                                const HyperParams& hp) {
  if (n_samples < 2) throw std::invalid_argument("variance_estimate: n_samples must be >= 2");
  const std::size_t dim = policy.num_params();

  std::vector<double> gp(n_samples * dim);
  std::vector<double> gr(n_samples * dim);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng(seed, StreamPurpose::kVarianceSample, i);
    const std::size_t s = rng.below(env.num_states());
    PairGradient split;
    switch (method) {
      case Method::kGrpo: {
        const ScoredSample sample = sample_scored_pair(env, policy, s, rng);
        const auto adv = group_normalize(sample.group.rewards, hp.eps_sigma);
        split = surrogate_pair_gradient(policy, sample.pair, adv[0], adv[1]);
        break;
      }
      case Method::kSoftPair: {
        const PreferencePair pair = sample_pair(env, policy, s, rng);
        split = surrogate_pair_gradient(policy, pair, soft_pair_reward(pair, pair.preferred),
                                        soft_pair_reward(pair, pair.rejected));
        break;
      }
      case Method::kHardPair: {
        const PreferencePair pair = sample_pair(env, policy, s, rng);
        split = hard_pair_gradient(policy, pair, delta, hp.p_min);
        break;
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      gp[i * dim + j] = split.preferred[j];
      gr[i * dim + j] = split.rejected[j];
    }
  }

  const double n = static_cast<double>(n_samples);
  std::vector<double> mean_p(dim, 0.0), mean_r(dim, 0.0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      mean_p[j] += gp[i * dim + j];
      mean_r[j] += gr[i * dim + j];
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    mean_p[j] /= n;
    mean_r[j] /= n;
  }

  GradientStats stats;
  stats.n_samples = n_samples;
  stats.mean = GradientVector(dim);
  stats.per_coord_variance = GradientVector(dim);
  std::vector<double> var_p(dim, 0.0), var_r(dim, 0.0), cov(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) stats.mean[j] = mean_p[j] - mean_r[j];
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double dp = gp[i * dim + j] - mean_p[j];
      const double dr = gr[i * dim + j] - mean_r[j];
      const double dg = (gp[i * dim + j] - gr[i * dim + j]) - stats.mean[j];
      var_p[j] += dp * dp;
      var_r[j] += dr * dr;
      cov[j] += dp * dr;
      stats.per_coord_variance[j] += dg * dg;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    stats.per_coord_variance[j] /= n - 1.0;
    stats.trace_variance += stats.per_coord_variance[j];
    stats.var_p_trace += var_p[j] / (n - 1.0);
    stats.var_r_trace += var_r[j] / (n - 1.0);
    stats.cov_pr_trace += cov[j] / (n - 1.0);
  }
  const double mean_sq = stats.mean.dot(stats.mean);
  stats.relative_variance = mean_sq > 0.0 ? stats.trace_variance / mean_sq
                                          : std::numeric_limits<double>::infinity();
  return stats;
}

std::string HierarchyReport::summary() const {
  std::ostringstream out;
  out.precision(6);
  out << "relative variance grpo=" << grpo.relative_variance
      << " soft=" << soft.relative_variance << " hard=" << hard.relative_variance
      << " | soft<grpo " << (soft_below_grpo ? "yes" : "NO")
      << " | hard<=soft " << (hard_not_above_soft ? "yes" : "NO");
  return out.str();
}

HierarchyReport variance_hierarchy(const TabularPolicy& policy,
                                   const PreferenceBandit& env, std::size_t n_samples,
                                   double delta, std::uint64_t seed,
                                   const HyperParams& hp) {
  HierarchyReport report;
  report.grpo = variance_estimate(Method::kGrpo, policy, env, n_samples, delta, seed, hp);
  report.soft = variance_estimate(Method::kSoftPair, policy, env, n_samples, delta, seed, hp);
  report.hard = variance_estimate(Method::kHardPair, policy, env, n_samples, delta, seed, hp);
  report.soft_below_grpo = report.soft.relative_variance < report.grpo.relative_variance;
  report.hard_not_above_soft = report.hard.relative_variance <= report.soft.relative_variance;
  report.strict_hierarchy = report.soft_below_grpo &&
                            report.hard.relative_variance < report.soft.relative_variance;
  return report;
}

StabilityMetrics stability_metrics(std::span<const EpochRecord> records) {
  if (records.size() < 2) throw std::invalid_argument("stability_metrics: need >= 2 records");
  auto population_variance = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size());
  };
  std::vector<double> norms, kls, diffs;
  for (const auto& r : records) {
    norms.push_back(r.grad_norm);
    kls.push_back(r.policy_kl);
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    diffs.push_back(records[i].loss_total - records[i - 1].loss_total);
  }
  return {.grad_norm_variance = population_variance(norms),
          .kl_std = std::sqrt(population_variance(kls)),
          .oscillation = std::sqrt(population_variance(diffs))};
}

}  // namespace pairgrpo

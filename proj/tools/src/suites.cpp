#include "pairgrpo_cli/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "pairgrpo/analysis.hpp"
#include "pairgrpo/envs.hpp"
#include "pairgrpo/errors.hpp"
#include "pairgrpo/objectives.hpp"
#include "pairgrpo/rng.hpp"
#include "pairgrpo/trainer.hpp"

namespace pairgrpo::cli {
namespace {

constexpr double kGradTolerance = 1e-5;
constexpr double kKinkMargin = 1e-3;
constexpr int kMaxResample = 50;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

TabularPolicy random_policy(std::size_t S, std::size_t A, double scale, Rng& rng) {
  std::vector<double> logits(S * A);
  for (auto& x : logits) x = scale * rng.normal();
  return TabularPolicy(S, A, std::move(logits));
}

TabularPolicy jitter(const TabularPolicy& base, double scale, Rng& rng) {
  std::vector<double> logits(base.logits().begin(), base.logits().end());
  for (auto& x : logits) x += scale * rng.normal();
  return TabularPolicy(base.num_states(), base.num_actions(), std::move(logits));
}

PreferencePair random_pair(std::size_t S, std::size_t A, Rng& rng) {
  const std::size_t s = rng.below(S);
  const std::size_t p = rng.below(A);
  std::size_t r = rng.below(A - 1);
  if (r >= p) ++r;
  return {s, p, r};
}

bool near_clip_kink(const TabularPolicy& policy, const TabularPolicy& reference,
                    const std::vector<SurrogateTerm>& terms, const HyperParams& hp) {
  const double hi = 1.0 + hp.eps_clip;
  const double lo = 1.0 - hp.eps_clip;
  for (const auto& t : terms) {
    const double rho = prob_ratio(policy, reference, t.state, t.action);
    const double v = hp.clip_mode == ClipMode::kRatio ? rho : rho * t.advantage;
    if (std::abs(v - hi) < kKinkMargin || std::abs(v - lo) < kKinkMargin) return true;
  }
  return false;
}

struct GradCase {
  TabularPolicy point;
  PolicyLoss loss;
  GradientVector analytic;
};

// A maker returns nullopt when the sampled point sits on a kink of the loss.
using CaseMaker = std::function<std::optional<GradCase>(Rng&)>;

struct ObjectiveCheck {
  double worst = 0.0;
  std::size_t failures = 0;
  std::size_t resampled = 0;
};

ObjectiveCheck check_objective(std::size_t points, std::uint64_t seed, std::uint64_t salt,
                               const CaseMaker& make) {
  ObjectiveCheck out;
  for (std::size_t i = 0; i < points; ++i) {
    bool done = false;
    for (int attempt = 0; attempt < kMaxResample && !done; ++attempt) {
      Rng rng(seed, StreamPurpose::kGeneric,
              (salt << 40) | (static_cast<std::uint64_t>(i) << 8) | static_cast<std::uint64_t>(attempt));
      std::optional<GradCase> c = make(rng);
      if (!c) {
        ++out.resampled;
        continue;
      }
      const double err = relative_error(c->analytic, finite_diff_grad(c->loss, c->point));
      out.worst = std::max(out.worst, err);
      if (!(err < kGradTolerance)) ++out.failures;
      done = true;
    }
    if (!done) ++out.failures;
  }
  return out;
}

struct Shape {
  std::size_t S;
  std::size_t A;
};

Shape random_shape(Rng& rng) { return {2 + rng.below(3), 2 + rng.below(5)}; }

std::vector<SurrogateTerm> pair_terms(const std::vector<PreferencePair>& pairs) {
  std::vector<SurrogateTerm> terms;
  for (const auto& p : pairs) {
    terms.push_back({p.state, p.preferred, 1.0});
    terms.push_back({p.state, p.rejected, -1.0});
  }
  return terms;
}

std::vector<std::size_t> pair_states(const std::vector<PreferencePair>& pairs) {
  std::vector<std::size_t> states;
  for (const auto& p : pairs) states.push_back(p.state);
  return unique_states(states);
}

SuiteResult suite_gradients(const RunConfig& config) {
  const HyperParams base = config.train.hp;
  const std::size_t n = config.analysis.gradient_points;
  const std::uint64_t seed = config.train.seed;

  const CaseMaker grpo = [&](Rng& rng) -> std::optional<GradCase> {
    const auto [S, A] = random_shape(rng);
    TabularPolicy policy = random_policy(S, A, 1.0, rng);
    const TabularPolicy reference = jitter(policy, 0.4 * rng.uniform(), rng);
    std::vector<GroupSample> groups;
    std::vector<SurrogateTerm> terms;
    for (int g = 0; g < 3; ++g) {
      GroupSample group{rng.below(S), {}, {}};
      for (int k = 0; k < base.group_size; ++k) {
        group.actions.push_back(rng.below(A));
        group.rewards.push_back(rng.normal());
      }
      const auto adv = group_normalize(group.rewards, base.eps_sigma);
      for (std::size_t k = 0; k < adv.size(); ++k) terms.push_back({group.state, group.actions[k], adv[k]});
      groups.push_back(std::move(group));
    }
    if (near_clip_kink(policy, reference, terms, base)) return std::nullopt;
    PolicyLoss loss = [=](const TabularPolicy& p) { return grpo_loss(p, reference, groups, base).total; };
    GradientVector g = grpo_loss(policy, reference, groups, base).gradient;
    return GradCase{std::move(policy), std::move(loss), std::move(g)};
  };

  auto soft_maker = [&](ClipMode mode) {
    return CaseMaker([&base, mode](Rng& rng) -> std::optional<GradCase> {
      HyperParams hp = base;
      hp.clip_mode = mode;
      const auto [S, A] = random_shape(rng);
      TabularPolicy policy = random_policy(S, A, 1.0, rng);
      const TabularPolicy reference = jitter(policy, 0.4 * rng.uniform(), rng);
      std::vector<PreferencePair> pairs;
      for (int i = 0; i < 3; ++i) pairs.push_back(random_pair(S, A, rng));
      if (near_clip_kink(policy, reference, pair_terms(pairs), hp)) return std::nullopt;
      PolicyLoss loss = [=](const TabularPolicy& p) { return soft_pair_loss(p, reference, pairs, hp).total; };
      GradientVector g = soft_pair_loss(policy, reference, pairs, hp).gradient;
      return GradCase{std::move(policy), std::move(loss), std::move(g)};
    });
  };

  const CaseMaker kl_fit = [&](Rng& rng) -> std::optional<GradCase> {
    const auto [S, A] = random_shape(rng);
    TabularPolicy policy = random_policy(S, A, 1.0, rng);
    const TabularPolicy reference = jitter(policy, 0.4, rng);
    std::vector<StateTarget> targets;
    for (int i = 0; i < 3; ++i) {
      const PreferencePair pair = random_pair(S, A, rng);
      targets.push_back({pair.state, build_target(action_probs(reference, pair.state), pair,
                                                  0.2 * rng.uniform(), base.p_min)});
    }
    const double p_min = base.p_min;
    PolicyLoss loss = [=](const TabularPolicy& p) { return kl_fit_loss(p, targets, p_min).total; };
    GradientVector g = kl_fit_loss(policy, targets, p_min).gradient;
    return GradCase{std::move(policy), std::move(loss), std::move(g)};
  };

  std::size_t hinge_active = 0;
  const CaseMaker hard = [&](Rng& rng) -> std::optional<GradCase> {
    const auto [S, A] = random_shape(rng);
    TabularPolicy policy = random_policy(S, A, 1.0, rng);
    const TabularPolicy reference = jitter(policy, 0.4 * rng.uniform(), rng);
    std::vector<PreferencePair> pairs;
    for (int i = 0; i < 3; ++i) pairs.push_back(random_pair(S, A, rng));
    const double delta = 0.2 * rng.uniform();
    const double d = policy_kl(policy, reference, pair_states(pairs));
    if (std::abs(d - base.beta) < kKinkMargin * base.beta) return std::nullopt;
    if (d > base.beta) ++hinge_active;
    PolicyLoss loss = [=](const TabularPolicy& p) {
      return hard_pair_total_loss(p, reference, pairs, delta, base).total;
    };
    GradientVector g = hard_pair_total_loss(policy, reference, pairs, delta, base).gradient;
    return GradCase{std::move(policy), std::move(loss), std::move(g)};
  };

  struct Named {
    const char* name;
    CaseMaker make;
  };
  const std::vector<Named> objectives = {
      {"grpo_loss", grpo},
      {"soft_pair_loss", soft_maker(ClipMode::kRatio)},
      {"soft_pair_loss[literal]", soft_maker(ClipMode::kLiteralProduct)},
      {"kl_fit_loss", kl_fit},
      {"hard_pair_total_loss", hard},
  };

  SuiteResult result{"gradients", true, {}};
  std::ostringstream detail;
  for (std::size_t k = 0; k < objectives.size(); ++k) {
    const ObjectiveCheck c = check_objective(n, seed, k + 1, objectives[k].make);
    if (c.failures > 0) result.passed = false;
    detail << objectives[k].name << ": worst rel err " << sci(c.worst) << " over " << n
           << " points, " << c.failures << " failures, " << c.resampled << " resampled near kinks";
    if (std::string(objectives[k].name) == "hard_pair_total_loss") {
      detail << ", hinge active at " << hinge_active;
    }
    detail << "\n";
  }
  result.detail = detail.str();
  return result;
}

SuiteResult suite_equivalence(const RunConfig& config) {
  SuiteResult result{"equivalence", true, {}};
  std::ostringstream detail;
  const double scales[] = {0.1, 1.0, 10.0};
  const double offsets[] = {-5.0, 0.0, 5.0};
  for (double scale : scales) {
    for (double offset : offsets) {
      EnvSpec spec = config.train.env;
      spec.noise_std = 0.0;
      spec.reward_scale = scale;
      spec.reward_offset = offset;
      const PreferenceBandit env(spec);
      const TabularPolicy uniform(env.num_states(), env.num_actions());
      const EquivalenceReport r = gradient_equivalence_check(
          uniform, env, config.analysis.equivalence_pairs, config.train.seed, config.train.hp,
          config.analysis.sigma_scope);
      const bool ok = std::abs(r.cosine - 1.0) < 1e-9 && std::abs(r.norm_ratio - 1.0) < 1e-9 &&
                      std::abs(r.c_formula - 1.0) < 1e-9;
      if (!ok) result.passed = false;
      detail << "scale " << scale << " offset " << offset << ": 1-cos " << sci(1.0 - r.cosine)
             << ", norm ratio-1 " << sci(r.norm_ratio - 1.0) << ", C-1 " << sci(r.c_formula - 1.0)
             << (ok ? "" : "  FAIL") << "\n";
    }
  }
  result.detail = detail.str();
  return result;
}

SuiteResult suite_decomposition(const RunConfig& config) {
  SuiteResult result{"decomposition", true, {}};
  const PreferenceBandit env(config.train.env);
  const TabularPolicy uniform(env.num_states(), env.num_actions());
  std::ostringstream detail;
  for (Method m : {Method::kGrpo, Method::kSoftPair, Method::kHardPair}) {
    const GradientStats st = variance_estimate(m, uniform, env, config.analysis.variance_samples,
                                               config.train.hp.delta0, config.train.seed,
                                               config.train.hp);
    const double residual = st.decomposition_residual();
    bool ok = residual < 1e-9;
    if (m == Method::kSoftPair && !(st.cov_pr_trace < 0.0)) ok = false;
    if (!ok) result.passed = false;
    detail << to_string(m) << ": residual " << sci(residual) << ", cov_pr_trace "
           << sci(st.cov_pr_trace) << (ok ? "" : "  FAIL") << "\n";
  }
  result.detail = detail.str();
  return result;
}

SuiteResult suite_target(const RunConfig& config) {
  constexpr std::size_t kCases = 100000;
  const double p_min = config.train.hp.p_min;
  std::size_t bad_sum = 0, bad_floor = 0, bad_locality = 0, over_budget = 0;
  for (std::size_t i = 0; i < kCases; ++i) {
    Rng rng(config.train.seed, StreamPurpose::kGeneric, (std::uint64_t{7} << 40) | i);
    const std::size_t A = 2 + rng.below(9);
    std::vector<double> logits(A);
    const double spread = 10.0 * rng.uniform();
    for (auto& x : logits) x = spread * rng.normal();
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(A);
    double z = 0.0;
    for (std::size_t a = 0; a < A; ++a) z += probs[a] = std::exp(logits[a] - mx);
    for (auto& p : probs) p /= z;
    const Distribution ref(probs);
    const PreferencePair pair = random_pair(1, A, rng);
    const double delta = rng.uniform() < 0.5 ? ref[pair.rejected] * (1.0 + 4.0 * rng.uniform())
                                             : 0.5 * rng.uniform();
    if (delta > ref[pair.rejected]) ++over_budget;
    const Distribution target = build_target(ref, pair, delta, p_min);
    double sum = 0.0;
    for (double p : target.probs()) sum += p;
    if (!(std::abs(sum - 1.0) <= 1e-12)) ++bad_sum;
    if (target[pair.rejected] < std::min(ref[pair.rejected], p_min)) ++bad_floor;
    for (std::size_t a = 0; a < A; ++a) {
      if (a != pair.preferred && a != pair.rejected && target[a] != ref[a]) {
        ++bad_locality;
        break;
      }
    }
  }
  SuiteResult result{"target", bad_sum == 0 && bad_floor == 0 && bad_locality == 0, {}};
  result.detail = std::to_string(kCases) + " cases (" + std::to_string(over_budget) +
                  " with delta > ref[a_r]): " + std::to_string(bad_sum) + " sum, " +
                  std::to_string(bad_floor) + " floor, " + std::to_string(bad_locality) +
                  " locality violations\n";
  return result;
}

SuiteResult suite_hinge(const RunConfig& config) {
  const HyperParams& hp = config.train.hp;
  std::size_t bad = 0;
  for (int i = 0; i <= 400; ++i) {
    const double d = hp.beta * (i / 100.0);
    const double expected = d > hp.beta ? hp.alpha * (d - hp.beta) : 0.0;
    if (std::abs(hinge_penalty(d, hp) - expected) > 1e-15) ++bad;
  }
  // Below the threshold the hinge must not touch the gradient.
  Rng rng(config.train.seed, StreamPurpose::kGeneric, std::uint64_t{8} << 40);
  const TabularPolicy policy = random_policy(2, 4, 1.0, rng);
  const std::vector<PreferencePair> pairs = {{0, 1, 2}, {1, 3, 0}};
  const double delta = 0.05;
  const LossReport total = hard_pair_total_loss(policy, policy, pairs, delta, hp);
  std::vector<StateTarget> targets;
  for (const auto& p : pairs) {
    targets.push_back({p.state, build_target(action_probs(policy, p.state), p, delta, hp.p_min)});
  }
  const LossReport fit = kl_fit_loss(policy, targets, hp.p_min);
  const double leak = relative_error(total.gradient, fit.gradient);
  if (total.kl_term != 0.0 || leak > 1e-14) ++bad;

  SuiteResult result{"hinge", bad == 0, {}};
  result.detail = "401 grid points against alpha*max(d-beta,0); inactive-hinge gradient diff " +
                  sci(leak) + "\n";
  return result;
}

SuiteResult suite_decay(const RunConfig& config) {
  TrainConfig tc = config.train;
  tc.method = Method::kHardPair;
  tc.fixed_delta = false;
  tc.epochs = std::min(tc.epochs, 30);
  const TrainResult run = train(tc);
  std::size_t mismatches = 0;
  for (const auto& r : run.records) {
    const double expected = tc.hp.delta0 * std::pow(tc.hp.gamma_decay, r.epoch);
    if (!r.delta_t || *r.delta_t != expected) ++mismatches;
  }
  bool decreasing = true;
  int first_small = -1;
  double prev = step_size(tc.hp, 0);
  for (int t = 1; t < 100000; ++t) {
    const double d = step_size(tc.hp, t);
    if (!(d < prev)) decreasing = false;
    prev = d;
    if (d < 1e-5) {
      first_small = t;
      break;
    }
  }
  SuiteResult result{"decay", mismatches == 0 && decreasing && first_small > 0 && !run.failed_epoch, {}};
  result.detail = std::to_string(run.records.size()) + " recorded delta_t, " +
                  std::to_string(mismatches) + " mismatches against delta0*gamma^t; delta_t < 1e-5 from t=" +
                  std::to_string(first_small) + "\n";
  return result;
}

SuiteResult suite_monotonicity(const RunConfig& config) {
  SuiteResult result{"monotonicity", true, {}};
  std::ostringstream detail;
  const int runs = config.analysis.monotonic_runs;
  for (Method m : {Method::kSoftPair, Method::kHardPair}) {
    int monotone = 0;
    for (int k = 0; k < runs; ++k) {
      TrainConfig tc = config.train;
      tc.method = m;
      tc.env.noise_std = 0.0;
      tc.seed = config.train.seed + static_cast<std::uint64_t>(k);
      const TrainResult run = train(tc);
      bool ok = !run.failed_epoch;
      double prev = run.initial_return;
      for (const auto& r : run.records) {
        if (r.expected_return < prev) ok = false;
        prev = r.expected_return;
      }
      monotone += ok;
    }
    const bool pass = monotone * 100 >= 95 * runs;
    if (!pass) result.passed = false;
    detail << to_string(m) << ": J non-decreasing in " << monotone << "/" << runs << " runs\n";
  }
  result.detail = detail.str();
  return result;
}

SuiteResult suite_directionality(const RunConfig& config) {
  constexpr std::size_t kCases = 10000;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < kCases; ++i) {
    Rng rng(config.train.seed, StreamPurpose::kGeneric, (std::uint64_t{9} << 40) | i);
    const auto [S, A] = random_shape(rng);
    TabularPolicy policy = random_policy(S, A, 2.0 * rng.uniform(), rng);
    const std::vector<PreferencePair> pairs = {random_pair(S, A, rng)};
    const auto& pair = pairs.front();
    const Distribution before = action_probs(policy, pair.state);
    const LossReport loss = soft_pair_loss(policy, policy, pairs, config.train.hp);
    policy.descend(loss.gradient, config.train.hp.eta);
    const Distribution after = action_probs(policy, pair.state);
    if (!(after[pair.preferred] > before[pair.preferred] && after[pair.rejected] < before[pair.rejected])) {
      ++wrong;
    }
  }
  SuiteResult result{"directionality", wrong == 0, {}};
  result.detail = std::to_string(kCases - wrong) + "/" + std::to_string(kCases) +
                  " single soft_pair steps raise pi(a_p) and lower pi(a_r)\n";
  return result;
}

SuiteResult suite_hierarchy(const RunConfig& config) {
  const PreferenceBandit env(config.train.env);
  const TabularPolicy uniform(env.num_states(), env.num_actions());
  const int reps = config.analysis.replicates;
  int soft_ok = 0;
  int hard_ok = 0;
  std::ostringstream detail;
  for (int k = 0; k < reps; ++k) {
    const HierarchyReport h = variance_hierarchy(uniform, env, config.analysis.variance_samples,
                                                 config.train.hp.delta0,
                                                 config.train.seed + static_cast<std::uint64_t>(k),
                                                 config.train.hp);
    soft_ok += h.soft_below_grpo;
    hard_ok += h.hard_not_above_soft;
    if (!h.soft_below_grpo || !h.hard_not_above_soft) {
      detail << "replicate " << k << ": " << h.summary() << "\n";
    }
  }
  const bool pass = soft_ok * 20 >= 19 * reps && hard_ok * 20 >= 15 * reps;
  SuiteResult result{"hierarchy", pass, {}};
  result.detail = "soft < grpo in " + std::to_string(soft_ok) + "/" + std::to_string(reps) +
                  ", hard <= soft in " + std::to_string(hard_ok) + "/" + std::to_string(reps) +
                  "\n" + detail.str();
  return result;
}

SuiteResult suite_convergence(const RunConfig& config) {
  TrainConfig tc = config.train;
  tc.method = Method::kHardPair;
  tc.fixed_delta = false;
  int first_small = 0;
  while (step_size(tc.hp, first_small) >= 1e-5) ++first_small;
  tc.epochs = first_small + config.analysis.convergence_tail - 1;
  const TrainResult run = train(tc);
  double worst_l1 = 0.0;
  int increases = 0;
  double prev = -1.0;
  std::size_t tail = 0;
  std::size_t delta_mismatch = 0;
  for (const auto& r : run.records) {
    if (!r.delta_t || *r.delta_t != tc.hp.delta0 * std::pow(tc.hp.gamma_decay, r.epoch)) ++delta_mismatch;
    if (r.epoch < first_small) continue;
    ++tail;
    worst_l1 = std::max(worst_l1, r.policy_l1_change);
    if (prev >= 0.0 && r.policy_l1_change > 1.1 * prev) ++increases;
    prev = r.policy_l1_change;
  }
  const bool pass = !run.failed_epoch && tail > 0 && worst_l1 < 1e-4 && increases == 0 &&
                    delta_mismatch == 0;
  SuiteResult result{"convergence", pass, {}};
  result.detail = "tail epochs " + std::to_string(first_small) + ".." + std::to_string(tc.epochs) +
                  ": max L1 change " + sci(worst_l1) + ", " + std::to_string(increases) +
                  " increases >10%, " + std::to_string(delta_mismatch) + " delta_t mismatches\n";
  return result;
}

using SuiteFn = SuiteResult (*)(const RunConfig&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> table = {
      {"gradients", suite_gradients},         {"equivalence", suite_equivalence},
      {"decomposition", suite_decomposition}, {"target", suite_target},
      {"hinge", suite_hinge},                 {"decay", suite_decay},
      {"monotonicity", suite_monotonicity},   {"directionality", suite_directionality},
      {"hierarchy", suite_hierarchy},         {"convergence", suite_convergence},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& default_suites() {
  static const std::vector<std::string> names = {
      "gradients", "equivalence", "decomposition", "target",
      "hinge",     "decay",       "monotonicity",  "directionality"};
  return names;
}

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, const RunConfig& config) {
  for (const auto& [key, fn] : registry()) {
    if (key == name) return fn(config);
  }
  throw ConfigError("--suite", "unknown suite '" + name + "'");
}

}  // namespace pairgrpo::cli

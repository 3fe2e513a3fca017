#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pairgrpo/errors.hpp"
#include "pairgrpo/objectives.hpp"
#include "pairgrpo/rng.hpp"

using namespace pairgrpo;

namespace {

TabularPolicy random_policy(std::size_t S, std::size_t A, double scale, Rng& rng) {
  std::vector<double> logits(S * A);
  for (auto& x : logits) x = scale * rng.normal();
  return TabularPolicy(S, A, logits);
}

TabularPolicy jitter(const TabularPolicy& p, double scale, Rng& rng) {
  std::vector<double> logits(p.logits().begin(), p.logits().end());
  for (auto& x : logits) x += scale * rng.normal();
  return TabularPolicy(p.num_states(), p.num_actions(), logits);
}

std::vector<double> flat(const TabularPolicy& p) { return {p.logits().begin(), p.logits().end()}; }

PreferencePair random_pair(std::size_t S, std::size_t A, Rng& rng) {
  const std::size_t p = rng.below(A);
  std::size_t r = rng.below(A - 1);
  if (r >= p) ++r;
  return {rng.below(S), p, r};
}

// Ratio and clip evaluated by hand, independent of the library.
double hand_ratio(const TabularPolicy& p, const TabularPolicy& q, std::size_t s, std::size_t a) {
  return oracle::softmax(p.row(s))[a] / oracle::softmax(q.row(s))[a];
}

bool near_kink(double rho, double adv, const HyperParams& hp) {
  const double v = hp.clip_mode == ClipMode::kRatio ? rho : rho * adv;
  return std::abs(v - 1.0 - hp.eps_clip) < 1e-3 || std::abs(v - 1.0 + hp.eps_clip) < 1e-3;
}

}  // namespace

TEST(Clip, Examples) {
  EXPECT_EQ(clip(1.3, 0.8, 1.2), 1.2);
  EXPECT_EQ(clip(1.0, 0.8, 1.2), 1.0);
  EXPECT_EQ(clip(0.5, 0.8, 1.2), 0.8);
  EXPECT_THROW(clip(1.0, 1.2, 0.8), std::invalid_argument);
}

TEST(HyperParams, DefaultsAndValidation) {
  const HyperParams hp;
  EXPECT_EQ(hp.eps_clip, 0.2);
  EXPECT_EQ(hp.beta, 0.01);
  EXPECT_EQ(hp.alpha, 0.5);
  EXPECT_EQ(hp.delta0, 0.02);
  EXPECT_EQ(hp.gamma_decay, 0.98);
  EXPECT_EQ(hp.group_size, 2);
  EXPECT_NO_THROW(hp.validate());

  auto field_of = [](HyperParams h) {
    try {
      h.validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  HyperParams h;
  h.beta = -0.1;
  EXPECT_EQ(field_of(h), "hp.beta");
  h = {};
  h.gamma_decay = 1.0;
  EXPECT_EQ(field_of(h), "hp.gamma_decay");
  h = {};
  h.eps_clip = 0.0;
  EXPECT_EQ(field_of(h), "hp.eps_clip");
  h = {};
  h.group_size = 1;
  EXPECT_EQ(field_of(h), "hp.K");
  h = {};
  h.p_min = 1e-3;
  EXPECT_EQ(field_of(h), "hp.p_min");
  h = {};
  h.alpha = -1.0;
  EXPECT_EQ(field_of(h), "hp.alpha");
}

TEST(GrpoLoss, AtReferenceIsZero) {
  const TabularPolicy p(1, 3);
  const std::vector<GroupSample> groups = {{0, {0, 2}, {1.0, 3.0}}};
  const LossReport r = grpo_loss(p, p, groups, {});
  EXPECT_NEAR(r.total, 0.0, 1e-15);
  EXPECT_EQ(r.kl_term, 0.0);
  // Gradient is the surrogate part only: -(1/2) * sum adv * grad log pi.
  const double pi = 1.0 / 3.0;
  EXPECT_NEAR(r.gradient[0], -0.5 * (-1.0 * (1.0 - pi) + 1.0 * (0.0 - pi)), 1e-15);
  EXPECT_NEAR(r.gradient[2], -0.5 * (-1.0 * (0.0 - pi) + 1.0 * (1.0 - pi)), 1e-15);
}

TEST(GrpoLoss, ValueMatchesHandComputation) {
  Rng rng(30, StreamPurpose::kGeneric, 0);
  for (int i = 0; i < 200; ++i) {
    HyperParams hp;
    if (i % 2) hp.clip_mode = ClipMode::kLiteralProduct;
    const TabularPolicy p = random_policy(2, 4, 1.0, rng);
    const TabularPolicy q = jitter(p, 0.5, rng);
    const std::vector<GroupSample> groups = {
        {0, {1, 3, 2}, {rng.normal(), rng.normal(), rng.normal()}},
        {1, {0, 0}, {rng.normal(), rng.normal()}}};
    double sum = 0.0;
    int n = 0;
    for (const auto& g : groups) {
      const auto adv = group_normalize(g.rewards, hp.eps_sigma);
      for (std::size_t k = 0; k < adv.size(); ++k) {
        const double rho = hand_ratio(p, q, g.state, g.actions[k]);
        const double unclipped = rho * adv[k];
        const double clipped = hp.clip_mode == ClipMode::kRatio
                                   ? std::clamp(rho, 1.0 - hp.eps_clip, 1.0 + hp.eps_clip) * adv[k]
                                   : std::clamp(rho * adv[k], 1.0 - hp.eps_clip, 1.0 + hp.eps_clip);
        sum += std::min(unclipped, clipped);
        ++n;
      }
    }
    const double kl = 0.5 * (oracle::kl(oracle::softmax(p.row(0)), oracle::softmax(q.row(0))) +
                             oracle::kl(oracle::softmax(p.row(1)), oracle::softmax(q.row(1))));
    ASSERT_NEAR(grpo_loss(p, q, groups, hp).total, -sum / n + hp.beta * kl, 1e-12);
  }
}

TEST(GrpoLoss, GradientMatchesFiniteDifferences) {
  Rng rng(31, StreamPurpose::kGeneric, 0);
  int checked = 0;
  while (checked < 100) {
    const HyperParams hp;
    const TabularPolicy p = random_policy(3, 4, 1.0, rng);
    const TabularPolicy q = jitter(p, 0.4 * rng.uniform(), rng);
    std::vector<GroupSample> groups;
    bool kink = false;
    for (int g = 0; g < 3; ++g) {
      GroupSample gs{rng.below(3), {rng.below(4), rng.below(4)}, {rng.normal(), rng.normal()}};
      const auto adv = group_normalize(gs.rewards);
      for (int k = 0; k < 2; ++k) kink |= near_kink(hand_ratio(p, q, gs.state, gs.actions[k]), adv[k], hp);
      groups.push_back(gs);
    }
    if (kink) continue;
    const auto fd = oracle::central_diff(
        [&](const std::vector<double>& x) { return grpo_loss(TabularPolicy(3, 4, x), q, groups, hp).total; },
        flat(p));
    ASSERT_LT(oracle::rel_err(grpo_loss(p, q, groups, hp).gradient.values(), fd), 1e-5);
    ++checked;
  }
}

TEST(SoftPairLoss, AtReferenceIsZeroWithSignedGradient) {
  Rng rng(32, StreamPurpose::kGeneric, 0);
  const TabularPolicy p = random_policy(2, 5, 1.0, rng);
  const std::vector<PreferencePair> pairs = {{1, 3, 0}};
  const LossReport r = soft_pair_loss(p, p, pairs, {});
  EXPECT_NEAR(r.total, 0.0, 1e-15);
  EXPECT_LT(r.gradient[p.flat_index(1, 3)], 0.0);
  EXPECT_GT(r.gradient[p.flat_index(1, 0)], 0.0);
  const auto fd = oracle::central_diff(
      [&](const std::vector<double>& x) { return soft_pair_loss(TabularPolicy(2, 5, x), p, pairs, {}).total; },
      flat(p));
  EXPECT_LT(fd[p.flat_index(1, 3)], 0.0);
  EXPECT_GT(fd[p.flat_index(1, 0)], 0.0);
}

TEST(SoftPairLoss, GradientMatchesFiniteDifferencesInBothClipModes) {
  Rng rng(33, StreamPurpose::kGeneric, 0);
  for (ClipMode mode : {ClipMode::kRatio, ClipMode::kLiteralProduct}) {
    HyperParams hp;
    hp.clip_mode = mode;
    int checked = 0;
    while (checked < 100) {
      const TabularPolicy p = random_policy(3, 4, 1.0, rng);
      const TabularPolicy q = jitter(p, 0.4 * rng.uniform(), rng);
      std::vector<PreferencePair> pairs;
      bool kink = false;
      for (int i = 0; i < 3; ++i) {
        const auto pr = random_pair(3, 4, rng);
        kink |= near_kink(hand_ratio(p, q, pr.state, pr.preferred), 1.0, hp);
        kink |= near_kink(hand_ratio(p, q, pr.state, pr.rejected), -1.0, hp);
        pairs.push_back(pr);
      }
      if (kink) continue;
      const auto fd = oracle::central_diff(
          [&](const std::vector<double>& x) {
            return soft_pair_loss(TabularPolicy(3, 4, x), q, pairs, hp).total;
          },
          flat(p));
      ASSERT_LT(oracle::rel_err(soft_pair_loss(p, q, pairs, hp).gradient.values(), fd), 1e-5);
      ++checked;
    }
  }
}

TEST(SoftPairLoss, EqualsGrpoAtReferenceForConsistentGroups) {
  Rng rng(34, StreamPurpose::kGeneric, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const TabularPolicy p = random_policy(4, 6, 1.0, rng);
    std::vector<PreferencePair> pairs;
    std::vector<GroupSample> groups;
    for (int i = 0; i < 10; ++i) {
      const auto pr = random_pair(4, 6, rng);
      const double lo = 5.0 * rng.normal();
      pairs.push_back(pr);
      groups.push_back({pr.state, {pr.preferred, pr.rejected}, {lo + 0.1 + rng.uniform(), lo}});
    }
    const auto g = grpo_loss(p, p, groups, {}).gradient;
    const auto s = soft_pair_loss(p, p, pairs, {}).gradient;
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(g[i], s[i], 1e-9);
  }
}

TEST(SoftPairLoss, DescentStepPushesPreferredUpRejectedDown) {
  Rng rng(35, StreamPurpose::kGeneric, 0);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t A = 2 + rng.below(8);
    TabularPolicy p = random_policy(2, A, 2.0 * rng.uniform(), rng);
    const std::vector<PreferencePair> pairs = {random_pair(2, A, rng)};
    const auto before = oracle::softmax(p.row(pairs[0].state));
    p.descend(soft_pair_loss(p, p, pairs, {}).gradient, 0.1);
    const auto after = oracle::softmax(p.row(pairs[0].state));
    ASSERT_GT(after[pairs[0].preferred], before[pairs[0].preferred]);
    ASSERT_LT(after[pairs[0].rejected], before[pairs[0].rejected]);
  }
}

TEST(StepSize, Examples) {
  const HyperParams hp;
  EXPECT_EQ(step_size(hp, 0), 0.02);
  EXPECT_NEAR(step_size(hp, 1), 0.0196, 1e-17);
  double prev = step_size(hp, 0);
  int t = 1;
  for (; t < 10000; ++t) {
    const double d = step_size(hp, t);
    ASSERT_LT(d, prev);
    prev = d;
    if (d < 1e-5) break;
  }
  EXPECT_LT(prev, 1e-5);
  EXPECT_THROW(step_size(hp, -1), std::invalid_argument);
}

TEST(BuildTarget, Examples) {
  const Distribution ref({0.5, 0.3, 0.2});
  const Distribution t = build_target(ref, {0, 0, 1}, 0.1, 1e-8);
  EXPECT_NEAR(t[0], 0.6, 1e-15);
  EXPECT_NEAR(t[1], 0.2, 1e-15);
  EXPECT_EQ(t[2], 0.2);

  const Distribution same = build_target(ref, {0, 0, 1}, 0.0, 1e-8);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(same[a], ref[a]);

  const Distribution small({0.5, 0.05, 0.45});
  const Distribution c = build_target(small, {0, 0, 1}, 0.1, 1e-8);
  EXPECT_EQ(c[1], 1e-8);
  EXPECT_NEAR(c[0], 0.5 + 0.05 - 1e-8, 1e-15);
  EXPECT_EQ(c[2], 0.45);
}

TEST(BuildTarget, LocalitySumAndFloor) {
  Rng rng(36, StreamPurpose::kGeneric, 0);
  for (int i = 0; i < 20000; ++i) {
    const std::size_t A = 2 + rng.below(9);
    const TabularPolicy p = random_policy(1, A, 8.0 * rng.uniform(), rng);
    const auto probs = oracle::softmax(p.row(0));
    const Distribution ref(probs);
    const auto pair = random_pair(1, A, rng);
    const double delta = rng.uniform();
    const Distribution t = build_target(ref, pair, delta, 1e-8);
    double sum = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      sum += t[a];
      if (a != pair.preferred && a != pair.rejected) ASSERT_EQ(t[a], ref[a]);
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    ASSERT_GE(t[pair.rejected], std::min(ref[pair.rejected], 1e-8));
    ASSERT_GE(t[pair.preferred], ref[pair.preferred]);
    ASSERT_LE(t[pair.preferred] - ref[pair.preferred], delta + 1e-15);
  }
}

TEST(KlFitLoss, ZeroAtTargetPositiveElsewhere) {
  const Distribution ref({0.5, 0.3, 0.2});
  const Distribution t = build_target(ref, {0, 0, 1}, 0.1, 1e-8);
  const TabularPolicy at(1, 3, {std::log(t[0]), std::log(t[1]), std::log(t[2])});
  const std::vector<StateTarget> targets = {{0, t}};
  const LossReport r = kl_fit_loss(at, targets);
  EXPECT_NEAR(r.total, 0.0, 1e-15);
  for (double g : r.gradient.values()) EXPECT_LT(std::abs(g), 1e-10);
  // Exact fit leaves every non-pair coordinate at the reference value.
  EXPECT_NEAR(oracle::softmax(at.row(0))[2], ref[2], 1e-15);

  const TabularPolicy off(1, 3, {0.1, 0.0, 0.0});
  EXPECT_GT(kl_fit_loss(off, targets).total, 0.0);
}

TEST(KlFitLoss, GradientMatchesFiniteDifferences) {
  Rng rng(37, StreamPurpose::kGeneric, 0);
  for (int i = 0; i < 100; ++i) {
    const TabularPolicy p = random_policy(3, 5, 1.0, rng);
    const TabularPolicy q = jitter(p, 0.5, rng);
    std::vector<StateTarget> targets;
    for (int k = 0; k < 4; ++k) {
      const auto pr = random_pair(3, 5, rng);
      targets.push_back({pr.state, build_target(Distribution(oracle::softmax(q.row(pr.state))), pr,
                                                0.2 * rng.uniform(), 1e-8)});
    }
    const auto fd = oracle::central_diff(
        [&](const std::vector<double>& x) { return kl_fit_loss(TabularPolicy(3, 5, x), targets).total; },
        flat(p));
    ASSERT_LT(oracle::rel_err(kl_fit_loss(p, targets).gradient.values(), fd), 1e-5);
  }
}

TEST(HingePenalty, Examples) {
  const HyperParams hp;
  EXPECT_EQ(hinge_penalty(0.005, hp), 0.0);
  EXPECT_NEAR(hinge_penalty(0.02, hp), 0.005, 1e-17);
  EXPECT_EQ(hinge_penalty(hp.beta, hp), 0.0);
  Rng rng(38, StreamPurpose::kGeneric, 0);
  for (int i = 0; i < 1000; ++i) {
    const double d = 0.03 * rng.uniform();
    ASSERT_EQ(hinge_penalty(d, hp) == 0.0, d <= hp.beta);
  }
}

TEST(HardPairTotalLoss, AtReference) {
  Rng rng(39, StreamPurpose::kGeneric, 0);
  const TabularPolicy p = random_policy(2, 4, 1.0, rng);
  const std::vector<PreferencePair> pairs = {{0, 1, 2}, {1, 0, 3}};
  const HyperParams hp;
  const LossReport zero = hard_pair_total_loss(p, p, pairs, 0.0, hp);
  EXPECT_NEAR(zero.total, 0.0, 1e-15);
  EXPECT_LT(zero.gradient.norm(), 1e-12);

  const LossReport moved = hard_pair_total_loss(p, p, pairs, 0.05, hp);
  EXPECT_EQ(moved.kl_term, 0.0);
  std::vector<StateTarget> targets;
  for (const auto& pr : pairs) {
    targets.push_back({pr.state, build_target(Distribution(oracle::softmax(p.row(pr.state))), pr, 0.05,
                                              hp.p_min)});
  }
  EXPECT_NEAR(moved.total, kl_fit_loss(p, targets).total, 1e-15);
}

TEST(HardPairTotalLoss, GradientMatchesFiniteDifferencesAwayFromHinge) {
  Rng rng(40, StreamPurpose::kGeneric, 0);
  const HyperParams hp;
  int checked = 0, active = 0;
  while (checked < 100) {
    const TabularPolicy p = random_policy(3, 4, 1.0, rng);
    const TabularPolicy q = jitter(p, 0.4 * rng.uniform(), rng);
    std::vector<PreferencePair> pairs;
    std::vector<std::size_t> states;
    for (int i = 0; i < 3; ++i) {
      pairs.push_back(random_pair(3, 4, rng));
      states.push_back(pairs.back().state);
    }
    const double delta = 0.1 * rng.uniform();
    const auto us = unique_states(states);
    double d = 0.0;
    for (auto s : us) d += oracle::kl(oracle::softmax(p.row(s)), oracle::softmax(q.row(s)));
    d /= static_cast<double>(us.size());
    if (std::abs(d - hp.beta) < 1e-5) continue;
    active += d > hp.beta;
    const auto fd = oracle::central_diff(
        [&](const std::vector<double>& x) {
          return hard_pair_total_loss(TabularPolicy(3, 4, x), q, pairs, delta, hp).total;
        },
        flat(p));
    ASSERT_LT(oracle::rel_err(hard_pair_total_loss(p, q, pairs, delta, hp).gradient.values(), fd), 1e-5);
    ++checked;
  }
  EXPECT_GT(active, 10);
  EXPECT_LT(active, 90);
}

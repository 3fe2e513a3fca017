#include <benchmark/benchmark.h>

#include <vector>

#include "pairgrpo/envs.hpp"
#include "pairgrpo/objectives.hpp"
#include "pairgrpo/rng.hpp"

namespace {

using namespace pairgrpo;

struct Batch {
  PreferenceBandit env{EnvSpec{}};
  TabularPolicy policy;
  TabularPolicy reference;
  std::vector<PreferencePair> pairs;
  std::vector<GroupSample> groups;

  explicit Batch(std::size_t n)
      : policy(env.num_states(), env.num_actions()), reference(policy) {
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(1, StreamPurpose::kTrainBatch, i);
      const std::size_t s = rng.below(env.num_states());
      ScoredSample smp = sample_scored_pair(env, reference, s, rng);
      pairs.push_back(smp.pair);
      groups.push_back(std::move(smp.group));
    }
  }
};

void BM_GrpoLoss(benchmark::State& state) {
  const Batch b(static_cast<std::size_t>(state.range(0)));
  const HyperParams hp;
  for (auto _ : state) benchmark::DoNotOptimize(grpo_loss(b.policy, b.reference, b.groups, hp));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GrpoLoss)->Arg(64)->Arg(1024);

void BM_SoftPairLoss(benchmark::State& state) {
  const Batch b(static_cast<std::size_t>(state.range(0)));
  const HyperParams hp;
  for (auto _ : state) benchmark::DoNotOptimize(soft_pair_loss(b.policy, b.reference, b.pairs, hp));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SoftPairLoss)->Arg(64)->Arg(1024);

void BM_HardPairTotalLoss(benchmark::State& state) {
  const Batch b(static_cast<std::size_t>(state.range(0)));
  const HyperParams hp;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hard_pair_total_loss(b.policy, b.reference, b.pairs, hp.delta0, hp));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HardPairTotalLoss)->Arg(64)->Arg(1024);

void BM_BuildTarget(benchmark::State& state) {
  const Batch b(1);
  const Distribution ref = action_probs(b.reference, b.pairs[0].state);
  for (auto _ : state) benchmark::DoNotOptimize(build_target(ref, b.pairs[0], 0.02, 1e-8));
}
BENCHMARK(BM_BuildTarget);

}  // namespace

#include <benchmark/benchmark.h>

#include <string>

#include "pairgrpo/analysis.hpp"
#include "pairgrpo/trainer.hpp"

namespace {

using namespace pairgrpo;

void BM_VarianceEstimate(benchmark::State& state) {
  const PreferenceBandit env{EnvSpec{}};
  const TabularPolicy uniform(env.num_states(), env.num_actions());
  const auto method = static_cast<Method>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(variance_estimate(method, uniform, env, 10000, 0.02, 0));
  }
  state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_VarianceEstimate)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_TrainDefault(benchmark::State& state) {
  TrainConfig tc;
  tc.method = static_cast<Method>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train(tc));
  state.SetLabel(std::string(to_string(tc.method)));
}
BENCHMARK(BM_TrainDefault)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "pcd/harness.hpp"

using namespace pcd;

namespace {

// One full episode per iteration; arg 0 picks the policy, arg 1 the method.
void BM_Episode(benchmark::State& state) {
  PolicySpec spec;
  spec.kind = state.range(0) == 0 ? PolicyKind::kAutoregressive : PolicyKind::kDiffusion;
  const Policy policy = Policy::make(spec);
  const World world(make_task(TaskKind::kReach), BrightnessShift{});
  const EpisodeOptions opts;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  for (auto _ : state) {
    const auto rec = state.range(1) == 0 ? run_baseline_episode(policy, world, opts, seed++)
                                         : run_pcd_episode(policy, world, opts, seed++);
    steps += rec.total_steps;
  }
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Episode)
    ->ArgNames({"diffusion", "pcd"})
    ->Args({0, 0})
    ->Args({0, 1})
    ->Args({1, 0})
    ->Args({1, 1})
    ->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
  const World world(make_task(TaskKind::kStack), DistractorShift{});
  const auto [scene, obs] = world.reset(7);
  for (auto _ : state) benchmark::DoNotOptimize(world.render(scene));
}
BENCHMARK(BM_Render);

}  // namespace

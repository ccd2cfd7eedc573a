#include <benchmark/benchmark.h>

#include <vector>

#include "pcd/action_dist.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/kde.hpp"
#include "pcd/rng.hpp"

using namespace pcd;

namespace {

CategoricalDist random_dist(const BinGrid& grid, Rng& rng) {
  std::vector<double> w(grid.count());
  for (double& v : w) v = rng.uniform() + 1e-3;
  return CategoricalDist::from_weights(grid, std::move(w));
}

void BM_ContrastiveCombine(benchmark::State& state) {
  const BinGrid grid(-1.0, 1.0, static_cast<std::size_t>(state.range(0)));
  Rng rng(1);
  const auto p = random_dist(grid, rng);
  const auto q = random_dist(grid, rng);
  const DecodeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(contrastive_combine(p, q, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ContrastiveCombine)->Arg(21)->Arg(256)->Arg(4096);

void BM_KdeEstimate(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (double& v : x) v = rng.normal(0.2, 0.1);
  const BinGrid grid(-1.0, 1.0, static_cast<std::size_t>(state.range(1)));
  const double b = scott_bandwidth(x);
  for (auto _ : state) benchmark::DoNotOptimize(kde_estimate(x, grid, b));
}
BENCHMARK(BM_KdeEstimate)->Args({24, 256})->Args({100, 256})->Args({24, 1024});

void BM_KdeMulti(benchmark::State& state) {
  Rng rng(3);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  SampleMatrix a(n, 3);
  SampleMatrix b(n, 3);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d = 0; d < 3; ++d) {
      a(r, d) = rng.normal(0.1, 0.05);
      b(r, d) = rng.normal(-0.1, 0.2);
    }
  }
  const KdeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(kde_estimate_multi(a, cfg, b));
}
BENCHMARK(BM_KdeMulti)->Arg(8)->Arg(24)->Arg(96);

void BM_DiffusionChain(benchmark::State& state) {
  const auto schedule = cosine_schedule(static_cast<std::size_t>(state.range(0)));
  const double sd = 0.16;
  const MixtureNoisePredictor score(
      GaussianMixture{{{0.4, {0.8, 0.1, 0.5}, {sd, sd, sd}}, {0.6, {-0.6, 0.3, 0.5}, {sd, sd, sd}}}});
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(sample_chain(3, schedule, score, rng));
}
BENCHMARK(BM_DiffusionChain)->Arg(10)->Arg(50)->Arg(100);

}  // namespace

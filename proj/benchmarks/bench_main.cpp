#include <benchmark/benchmark.h>

#include "reorder/backbone.hpp"
#include "reorder/compression_prior.hpp"
#include "reorder/grid_linearize.hpp"
#include "reorder/pl_policy.hpp"
#include "reorder/rng.hpp"
#include "reorder/synth_data.hpp"

namespace {

using namespace reorder;

void BM_Linearize(benchmark::State& state) {
  const auto order = static_cast<ScanOrder>(state.range(0));
  const GridSpec grid{14, 14};
  for (auto _ : state) benchmark::DoNotOptimize(linearize(order, grid));
  state.SetLabel(std::string(to_string(order)));
}
BENCHMARK(BM_Linearize)->DenseRange(0, static_cast<int>(kAllScanOrders.size()) - 1);

void BM_GumbelSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PolicyLogits z = init_from_prior(n, Permutation::identity(n));
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(sample(z, 0.2, rng));
}
BENCHMARK(BM_GumbelSample)->Arg(16)->Arg(196);

void BM_LogProbGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PolicyLogits z = init_from_prior(n, Permutation::identity(n));
  Rng rng(3);
  const Permutation perm = sample(z, 0.5, rng).perm;
  for (auto _ : state) benchmark::DoNotOptimize(log_prob_gradient(z, perm));
}
BENCHMARK(BM_LogProbGradient)->Arg(16)->Arg(196);

void BM_Forward(benchmark::State& state) {
  BackboneConfig cfg;
  cfg.kind = static_cast<BackboneKind>(state.range(0));
  cfg.grid = {8, 8};
  cfg.embed_dim = 16;
  const ToyBackbone model(cfg, 1);
  std::vector<double> features(cfg.grid.size() * cfg.channels, 0.25);
  const Permutation perm = Permutation::identity(cfg.grid.size());
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(features, perm));
  state.SetLabel(std::string(to_string(cfg.kind)));
}
BENCHMARK(BM_Forward)->DenseRange(0, 4);

void BM_RankOrderings(benchmark::State& state) {
  SynthSpec spec;
  spec.family = SynthFamily::stripes_h;
  spec.grid = {14, 14};
  spec.train_size = 128;
  spec.val_size = 1;
  const auto data = generate(spec).train;
  PriorConfig cfg;
  cfg.sample_size = 128;
  for (auto _ : state) benchmark::DoNotOptimize(rank_orderings(data, cfg));
}
BENCHMARK(BM_RankOrderings)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

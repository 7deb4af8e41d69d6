#include "cts/mapping.hpp"
#include "cts/metrics.hpp"
#include "cts/pipeline.hpp"
#include "cts/rocket.hpp"
#include "cts/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace cts;

namespace {

TimeSeries random_series(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  TimeSeries x(length, 1);
  for (std::size_t t = 0; t < length; ++t) x(t, 0) = g(rng);
  return x;
}

void BM_Dtw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_series(n, 1), b = random_series(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(eval::dtw(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dtw)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNSquared);

void BM_RocketFeatures(benchmark::State& state) {
  const auto kernels = eval::rocket_kernels(static_cast<std::size_t>(state.range(0)), 128, 1, 7);
  const auto x = random_series(128, 3);
  for (auto _ : state) benchmark::DoNotOptimize(eval::rocket_features(kernels, x));
}
BENCHMARK(BM_RocketFeatures)->Arg(100)->Arg(1000);

void BM_TreeFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ConditionSchema schema({SlotSpec{"a", SlotKind::numeric, {}}, SlotSpec{"b", SlotKind::numeric, {}}});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ConditionVector> conds;
  std::vector<Eigen::VectorXd> targets;
  for (std::size_t i = 0; i < n; ++i) {
    conds.push_back(ConditionVector({ConditionSlot(u(rng)), ConditionSlot(u(rng))}));
    targets.push_back(Eigen::VectorXd::NullaryExpr(16, [&] { return u(rng); }));
  }
  mapping::MappingConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mapping::fit(conds, targets, schema, cfg));
}
BENCHMARK(BM_TreeFit)->Arg(20)->Arg(200);

void BM_Generate(benchmark::State& state) {
  static const auto setup = [] {
    data::SynthSpec s;
    s.length = 64;
    s.count = 2000;
    s.amplitude = data::FactorRange::choice({0.5, 1.0, 1.5, 2.0});
    s.frequency = data::FactorRange::choice({1.0, 2.0, 3.0});
    auto d = data::synth_generate(s);
    pipeline::PipelineConfig cfg;
    cfg.train.epochs = 2;
    return std::make_pair(d, pipeline::train_phase(d, cfg));
  }();
  pipeline::GenerationRequest r;
  r.x0 = setup.first.series(0);
  r.c0 = setup.first.condition(0);
  r.c0_prime = r.c0;
  r.c0_prime[0] = 1.25;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::generate(setup.second, r));
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

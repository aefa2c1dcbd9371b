#include <benchmark/benchmark.h>

#include "acceval/config.hpp"
#include "acceval/cross_entropy.hpp"

using namespace acceval;

namespace {

const ScenarioModel& model() {
  static const ScenarioModel m = ModelConfig::defaults().build();
  return m;
}

void BM_Philox(benchmark::State& state) {
  RandomStream rng(1, {1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(rng.uniform());
}
BENCHMARK(BM_Philox);

void BM_SampleScenario(benchmark::State& state) {
  const ProposalParams p{-0.14, 0.0, "medium"};
  const auto& bin = model().bin("medium");
  std::uint64_t i = 0;
  for (auto _ : state) {
    RandomStream rng(1, {2, i++});
    benchmark::DoNotOptimize(sample_scenario(model(), &p, bin, rng));
  }
}
BENCHMARK(BM_SampleScenario);

void BM_Simulate(benchmark::State& state) {
  const AvConfig cfg;
  const auto sc = make_scenario(15.0, 0.05, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sc, cfg));
}
BENCHMARK(BM_Simulate);

void BM_BuildModel(benchmark::State& state) {
  const auto cfg = ModelConfig::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(cfg.build());
}
BENCHMARK(BM_BuildModel)->Unit(benchmark::kMillisecond);

void BM_ConflictEstimate(benchmark::State& state) {
  const AvConfig plant;
  EstimationRequest req;
  req.model = &model();
  req.plant = &plant;
  req.bin = "low";
  req.proposal = ProposalParams{-0.14, 0.0, "low"};
  req.n_cap = 1000;
  req.min_samples = 1000;
  req.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_estimation(req));
}
BENCHMARK(BM_ConflictEstimate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();

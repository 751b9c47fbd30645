#include <benchmark/benchmark.h>

#include <vector>

#include "ovbsl/batch_vb.hpp"
#include "ovbsl/datagen.hpp"
#include "ovbsl/online_tracker.hpp"

namespace {

using namespace ovbsl;

std::vector<StreamSample> make_stream(Index K, double pi, std::uint64_t n) {
  ScenarioSpec spec;
  spec.K = K;
  spec.r = 5;
  spec.n_samples = n;
  spec.pi = pi;
  return gen_scenario(spec).samples;
}

// One tracker step; args are K, L and the observed percentage.
void BM_TrackerStep(benchmark::State& bench) {
  const Index K = bench.range(0);
  const Index L = bench.range(1);
  const double pi = static_cast<double>(bench.range(2)) / 100.0;
  const auto samples = make_stream(K, pi, 512);
  auto state = init_state({K, L}, HyperParams{}, 1);
  std::size_t i = 0;
  for (auto _ : bench) {
    if (i == samples.size()) {
      bench.PauseTiming();
      state = init_state({K, L}, HyperParams{}, 1);
      i = 0;
      bench.ResumeTiming();
    }
    benchmark::DoNotOptimize(step(state, samples[i++]));
  }
  bench.counters["flops/step"] = static_cast<double>(state.diagnostics.step_flops);
}
BENCHMARK(BM_TrackerStep)
    ->ArgsProduct({{100, 500}, {5, 10, 20}, {25, 100}})
    ->Unit(benchmark::kMicrosecond);

// One full batch cycle over n samples; args are K, L and n.
void BM_BatchCycle(benchmark::State& bench) {
  const Index K = bench.range(0);
  const Index L = bench.range(1);
  BatchDataset data;
  data.dims = {K, L};
  data.samples = make_stream(K, 0.5, static_cast<std::uint64_t>(bench.range(2)));
  BatchOptions opts;
  opts.max_iters = 1;
  for (auto _ : bench) benchmark::DoNotOptimize(batch_fit(data, HyperParams{}, opts));
}
BENCHMARK(BM_BatchCycle)->Args({50, 10, 200})->Args({200, 10, 500})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

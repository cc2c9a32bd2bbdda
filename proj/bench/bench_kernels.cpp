// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to the
// worker count of interest; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include "bohmstab/relaxation.hpp"

using namespace bohmstab;

namespace {

const WaveFunctionModel& model() {
  static const auto m = WaveFunctionModel::equal_superposition(4, 0.5);
  return m;
}

const KernelSpec kKernel = KernelSpec::gaussian(1.0);
const NonEquilibriumSpec kOffset = NonEquilibriumSpec::offset(1.0);

void BM_SampleParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_nonequilibrium(model(), kOffset, kKernel, 0.0, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SampleSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::sample_nonequilibrium(model(), kOffset, kKernel, 0.0, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EvolveParallel(benchmark::State& state) {
  const Ensemble start = sample_nonequilibrium(model(), kOffset, kKernel, 0.0, static_cast<std::size_t>(state.range(0)), 2);
  const ForceLaw law = ForceLaw::modified(model(), kKernel);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_ensemble(start, law, 0.5, {.dt = 0.01}, {.truncation_limit = 0.5}));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 50);
}

void BM_EvolveSerial(benchmark::State& state) {
  const Ensemble start = sample_nonequilibrium(model(), kOffset, kKernel, 0.0, static_cast<std::size_t>(state.range(0)), 2);
  const ForceLaw law = ForceLaw::modified(model(), kKernel);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::evolve_ensemble(start, law, 0.5, {.dt = 0.01}, {.truncation_limit = 0.5}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 50);
}

void BM_CoarseGrainParallel(benchmark::State& state) {
  const Ensemble ens = sample_nonequilibrium(model(), kOffset, kKernel, 0.0, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(coarse_grain(ens, CoarseGrid{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CoarseGrainSerial(benchmark::State& state) {
  const Ensemble ens = sample_nonequilibrium(model(), kOffset, kKernel, 0.0, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(reference::coarse_grain(ens, CoarseGrid{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EquilibriumCellsParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(equilibrium_cell_averages(model(), kKernel, CoarseGrid{}, 1.0));
}

void BM_EquilibriumCellsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::equilibrium_cell_averages(model(), kKernel, CoarseGrid{}, 1.0));
}

}  // namespace

BENCHMARK(BM_SampleParallel)->Arg(100'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleSerial)->Arg(100'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvolveParallel)->Arg(10'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvolveSerial)->Arg(10'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoarseGrainParallel)->Arg(1'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoarseGrainSerial)->Arg(1'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EquilibriumCellsParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EquilibriumCellsSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

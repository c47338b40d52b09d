#include <benchmark/benchmark.h>

#include "conic/hankel.hpp"
#include "conic/kernel.hpp"

using namespace conic;

namespace {

std::shared_ptr<const ScatteringModel> hyperboloid(double x_max) {
  ProfileConfig c;
  c.kind = "hyperboloid";
  c.params = {{"a", 1.0}};
  c.x_max = x_max;
  return std::make_shared<const ScatteringModel>(build_potential(c));
}

const ScatteringModel& model() {
  static const auto m = hyperboloid(1e5);
  return *m;
}

const KernelEvaluator& evaluator() {
  static const KernelEvaluator ev(hyperboloid(1e4));
  return ev;
}

void BM_Hankel(benchmark::State& state) {
  const double z = std::pow(10.0, state.range(0) / 2.0 - 2);
  for (auto _ : state) benchmark::DoNotOptimize(hankel0_plus(z));
}
BENCHMARK(BM_Hankel)->DenseRange(0, 8, 2);

void BM_JostSolve(benchmark::State& state) {
  const double lambda = std::pow(10.0, state.range(0) - 3);
  model();
  for (auto _ : state) benchmark::DoNotOptimize(model().jost(lambda));
}
BENCHMARK(BM_JostSolve)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

void BM_MPlus(benchmark::State& state) {
  const JostSolution J = model().jost(0.3);
  double x = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(J.m_plus(x));
    x = x > 1e4 ? 0 : x + 7.3;
  }
}
BENCHMARK(BM_MPlus);

void BM_LowEnergyScattering(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(model().scattering(1e-3));
}
BENCHMARK(BM_LowEnergyScattering)->Unit(benchmark::kMillisecond);

void BM_SchrodingerKernel(benchmark::State& state) {
  const double t = std::pow(10.0, state.range(0));
  evaluator().evolution_kernel(KernelKind::schrodinger, t, 30, -10);
  for (auto _ : state) benchmark::DoNotOptimize(evaluator().evolution_kernel(KernelKind::schrodinger, t, 30, -10));
}
BENCHMARK(BM_SchrodingerKernel)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_WaveBand(benchmark::State& state) {
  const double t = std::pow(10.0, state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluator().band_kernel(KernelKind::wave_plus, Band::osc_low, t, 300, -3));
}
BENCHMARK(BM_WaveBand)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_StationaryPhase(benchmark::State& state) {
  const auto lib = stationary_phase_library();
  for (auto _ : state)
    for (const auto& c : lib) benchmark::DoNotOptimize(stationary_phase_check(c));
}
BENCHMARK(BM_StationaryPhase)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include "dirk/conditions.hpp"
#include "dirk/integrator.hpp"
#include "dirk/problems.hpp"
#include "dirk/stability.hpp"
#include "dirk/tableau.hpp"
#include "dirk/trees.hpp"

#include <benchmark/benchmark.h>

using namespace dirk;

static void BM_EnumerateTrees(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_trees(q));
}
BENCHMARK(BM_EnumerateTrees)->DenseRange(6, 10, 2);

static void BM_VerifyOrder(benchmark::State& state) {
  const auto t = load_builtin("DIRK(15,8)SA");
  for (auto _ : state) benchmark::DoNotOptimize(verify_order(t));
}
BENCHMARK(BM_VerifyOrder)->Unit(benchmark::kMillisecond);

static void BM_InternalStabilityScan(benchmark::State& state) {
  const auto t = load_builtin("DIRK(13,8)A");
  for (auto _ : state) benchmark::DoNotOptimize(internal_stability_maxima(t));
}
BENCHMARK(BM_InternalStabilityScan)->Unit(benchmark::kMillisecond);

static void BM_AStabilityCheck(benchmark::State& state) {
  const auto t = load_builtin("DIRK(15,8)SA");
  for (auto _ : state) benchmark::DoNotOptimize(a_stability_check(t));
}
BENCHMARK(BM_AStabilityCheck)->Unit(benchmark::kMicrosecond);

// One step of the banded Brusselator system (1000 unknowns).
static void BM_BrusselatorStep(benchmark::State& state) {
  const auto t = load_builtin("DIRK(8,6)SA");
  const auto p = brusselator();
  StepperConfig cfg;
  cfg.dt = 0.01;
  DirkStepper stepper(t, p, cfg);
  for (auto _ : state) {
    Eigen::VectorXd y = p.y0;
    SolveTrace trace;
    stepper.step(p.t0, y, trace);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_BrusselatorStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

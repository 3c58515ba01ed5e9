#include <benchmark/benchmark.h>

#include <mflq/sim.hpp>

#include "support/instances.hpp"

namespace {

mflq::DecomposedModel benchInstance(int n, int m, int m0) {
  mflq::CounterRng rng(0xB1460, 0);
  mflq::testing::InstanceOptions opt;
  opt.n = n;
  opt.m = m;
  opt.m0 = m0;
  return mflq::testing::randomStableDecomposed(rng, opt);
}

void BM_MomentAbscissa(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const mflq::DecomposedModel dm = benchInstance(n, 2, 3);
  const mflq::FeedbackLaw zero = mflq::FeedbackLaw::zero(3, n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mflq::momentAbscissa(dm, zero));
  }
}
BENCHMARK(BM_MomentAbscissa)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_SolveRegularizedAre(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const mflq::DecomposedModel dm = benchInstance(n, 2, 3);
  const mflq::FeedbackLaw zero = mflq::FeedbackLaw::zero(3, n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mflq::solveRegularizedAre(dm, 0.25, zero));
  }
}
BENCHMARK(BM_SolveRegularizedAre)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_DeltaSweep(benchmark::State& state) {
  const mflq::DecomposedModel dm = benchInstance(3, 2, 3);
  const mflq::FeedbackLaw zero = mflq::FeedbackLaw::zero(3, 3, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mflq::deltaSweep(dm, mflq::defaultDeltaSchedule(), zero));
  }
}
BENCHMARK(BM_DeltaSweep)->Unit(benchmark::kMillisecond);

void BM_ChainSimulation(benchmark::State& state) {
  mflq::CounterRng rng(7, 0);
  const mflq::MarkovGenerator gen = mflq::testing::randomGenerator(rng, 3, 1.0);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mflq::simulateChain(gen, 0, 0.0, 100.0, 1, stream++));
  }
}
BENCHMARK(BM_ChainSimulation)->Unit(benchmark::kMicrosecond);

void BM_SimulatePaths(benchmark::State& state) {
  const mflq::DecomposedModel dm = benchInstance(2, 1, 2);
  const mflq::FeedbackLaw zero = mflq::FeedbackLaw::zero(2, 2, 1);
  mflq::SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.T = 2.0;
  cfg.nPaths = static_cast<int>(state.range(0));
  cfg.x2 = Eigen::VectorXd::Ones(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mflq::simulatePaths(dm, zero, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.nPaths *
                          static_cast<long>(cfg.T / cfg.dt));
}
BENCHMARK(BM_SimulatePaths)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FiniteHorizonOracle(benchmark::State& state) {
  const mflq::DecomposedModel dm = benchInstance(3, 2, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mflq::finiteHorizonOracle(dm, 0.25, 50.0, 0.02));
  }
}
BENCHMARK(BM_FiniteHorizonOracle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

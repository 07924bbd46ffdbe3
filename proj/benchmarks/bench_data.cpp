#include <benchmark/benchmark.h>

#include "tradelab/data/covariance.hpp"
#include "tradelab/data/indicators.hpp"
#include "tradelab/data/synth.hpp"

namespace {

using namespace tradelab::data;

PanelData market(int symbols) {
  return synth_gbm(SynthSpec::uniform(symbols, 1024, 0.0, 0.01, 0.3, 100.0, 1));
}

void BM_Indicators(benchmark::State& state) {
  const auto p = market(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_indicators(p));
}
BENCHMARK(BM_Indicators)->Arg(8)->Arg(32);

void BM_RollingCovariance(benchmark::State& state) {
  const auto p = market(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rolling_covariance(p, 60));
}
BENCHMARK(BM_RollingCovariance)->Arg(8)->Arg(32);

}  // namespace

#include <benchmark/benchmark.h>

#include "tradelab/config/pipeline.hpp"
#include "tradelab/data/synth.hpp"

namespace {

using namespace tradelab;

void BM_OodIteration(benchmark::State& state) {
  config::RunConfig cfg;
  cfg.agent.hidden = {64, 64};
  cfg.train.t1 = 1;
  cfg.train.mode = state.range(0) ? train::BilevelMode::second_order : train::BilevelMode::first_order;
  data::PrepareConfig pc;
  const auto d = data::prepare(data::synth_gbm(data::SynthSpec::uniform(8, 1024, 0.0, 0.01, 0.3, 100.0, 1)), pc);
  const auto enc = eval::make_encoder(d, cfg.encoder);
  const train::SubsetPool pool(transforms::expand(config::training_subsets(d, cfg), cfg.transform), enc);
  const auto agent = config::initial_agent(d, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train::train_ood(pool, agent, cfg.train, cfg.env, cfg.transform));
    cfg.train.seed++;
  }
}
BENCHMARK(BM_OodIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

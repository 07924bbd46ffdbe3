#include "tradelab/config/pipeline.hpp"

#include <algorithm>

#include "tradelab/error.hpp"

namespace tradelab::config {
namespace {

int day_of(const data::PreparedData& d, const std::string& date, const char* what) {
  const auto it = std::find(d.panel.dates.begin(), d.panel.dates.end(), date);
  if (it == d.panel.dates.end())
    throw ValidationError(std::string(what) + " " + date + " is not a trading day of the dataset");
  return static_cast<int>(it - d.panel.dates.begin());
}

}  // namespace

int min_context_days(const RunConfig& c) {
  int warm = std::max(c.encoder.k_s, c.data.cov_window - 1);
  for (int w : data::kIndicatorWarmup) warm = std::max(warm, w);
  return warm;
}

std::vector<transforms::Subset> training_subsets(const data::PreparedData& d, const RunConfig& c) {
  if (c.context_days < min_context_days(c))
    throw ConfigError("context_days must be at least " + std::to_string(min_context_days(c)) +
                      " for the encoder warm-up");
  const auto panel = d.panel.slice_days(0, d.train.end);
  return transforms::partition(panel, c.transform.T, {c.context_days, c.context_days, c.data.cov_window});
}

sac::AgentParams initial_agent(const data::PreparedData& d, const RunConfig& c) {
  const int S = d.panel.num_symbols();
  const sac::AgentSpec spec{encoder::state_dim(S, c.encoder.D), S, c.agent.hidden};
  return sac::make_agent(spec, c.seed, c.agent.lambda, c.agent.gamma);
}

TrainOutcome run_training(const data::PreparedData& d, const RunConfig& c, const sac::AgentParams& start,
                          bool with_finetune) {
  c.validate();
  const auto enc = eval::make_encoder(d, c.encoder);
  const train::SubsetPool pool(transforms::expand(training_subsets(d, c), c.transform), enc);
  TrainOutcome out;
  auto ood = train::train_ood(pool, start, c.train, c.env, c.transform);
  out.agent = std::move(ood.agent);
  out.ood_log = std::move(ood.log);
  if (with_finetune) {
    auto ft = train::finetune(pool, train::recent_originals(pool, c.train.recent_subsets), out.agent, c.train, c.env);
    out.agent = std::move(ft.agent);
    out.finetune_log = std::move(ft.log);
  }
  return out;
}

train::TrainResult run_finetune(const data::PreparedData& d, const RunConfig& c, const sac::AgentParams& start) {
  c.validate();
  const auto enc = eval::make_encoder(d, c.encoder);
  const train::SubsetPool pool(training_subsets(d, c), enc);
  return train::finetune(pool, train::recent_originals(pool, c.train.recent_subsets), start, c.train, c.env);
}

eval::Period evaluation_period(const data::PreparedData& d, const RunConfig& c) {
  eval::Period p{d.test.begin - 1, d.test.end - 1};
  if (c.eval.start_date) p.first = day_of(d, *c.eval.start_date, "eval.start_date");
  if (c.eval.end_date) p.last = day_of(d, *c.eval.end_date, "eval.end_date");
  if (p.first < 0 || p.first >= p.last) throw ValidationError("evaluation period is empty");
  return p;
}

eval::BacktestOptions backtest_options(const RunConfig& c) {
  eval::BacktestOptions o;
  o.env = c.env;
  o.metrics = c.eval.metrics;
  o.seed = c.seed;
  o.config_hash = config_hash(c);
  return o;
}

eval::OnlineOptions online_options(const RunConfig& c) {
  eval::OnlineOptions o;
  o.splits = c.eval.splits;
  o.context_days = c.context_days;
  o.cov_window = c.data.cov_window;
  o.train = c.train;
  return o;
}

}  // namespace tradelab::config

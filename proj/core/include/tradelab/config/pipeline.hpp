#pragma once

#include <vector>

#include "tradelab/config/run_config.hpp"
#include "tradelab/eval/backtest.hpp"
#include "tradelab/train/pool.hpp"
#include "tradelab/train/trainer.hpp"

namespace tradelab::config {

// Fewest history rows a subset needs for its first step to be encodable.
int min_context_days(const RunConfig& c);

// Original T-step subsets over the training range, each with
// `context_days` rows of history in front.
std::vector<transforms::Subset> training_subsets(const data::PreparedData& d, const RunConfig& c);

sac::AgentParams initial_agent(const data::PreparedData& d, const RunConfig& c);

struct TrainOutcome {
  sac::AgentParams agent;
  std::vector<train::LogRow> ood_log;
  std::vector<train::LogRow> finetune_log;
};

// Expands the training subsets with every transform, runs the OOD stage
// from `start`, then optionally finetunes on the most recent originals.
TrainOutcome run_training(const data::PreparedData& d, const RunConfig& c, const sac::AgentParams& start,
                          bool with_finetune);
// Finetuning stage only.
train::TrainResult run_finetune(const data::PreparedData& d, const RunConfig& c, const sac::AgentParams& start);

// Configured dates, or by default the held-out range with the decision made
// at the close of the last training day.
eval::Period evaluation_period(const data::PreparedData& d, const RunConfig& c);

eval::BacktestOptions backtest_options(const RunConfig& c);
eval::OnlineOptions online_options(const RunConfig& c);

}  // namespace tradelab::config

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tradelab/data/dataset.hpp"
#include "tradelab/encoder/encoder.hpp"
#include "tradelab/env/env.hpp"
#include "tradelab/eval/metrics.hpp"
#include "tradelab/train/checkpoint.hpp"
#include "tradelab/train/trainer.hpp"

namespace tradelab::eval {

// Inclusive range of panel day indices; the backtest trades on every day
// but the last.
struct Period {
  int first = 0;
  int last = 0;
  int steps() const { return last - first; }
  friend bool operator==(const Period&, const Period&) = default;
};

struct BacktestReport {
  std::vector<std::string> dates;  // one per value, first..last
  std::vector<double> values;      // A_0..A_H
  std::vector<double> rewards;     // r_0..r_{H-1}
  std::vector<std::vector<double>> actions;  // discretized share requests per step
  Metrics metrics;
  MetricOptions metric_options;
  std::string start_date;
  std::string end_date;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool self_consistent = false;
  env::BalanceState final_balance;

  // Recomputes metrics from the stored series and compares exactly.
  bool check_consistency() const;
};

bool operator==(const BacktestReport& a, const BacktestReport& b);

// Action source: (state vector, panel day, balance) -> a in [-1, 1]^S.
using BacktestPolicy = std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, const env::BalanceState&)>;

BacktestPolicy deterministic_policy(const sac::AgentParams& agent);

struct BacktestOptions {
  env::EnvConfig env;
  MetricOptions metrics;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// First panel day at which every encoder input is defined.
int first_tradable_day(const data::PreparedData& d, const encoder::EncoderConfig& enc);

encoder::FeatureMapEncoder make_encoder(const data::PreparedData& d, const encoder::EncoderConfig& enc);

// Replays `period` from `initial` (all cash at env.initial_cash when
// omitted) with discretized trades.
BacktestReport backtest(const BacktestPolicy& policy, const data::PreparedData& d, Period period,
                        const encoder::EncoderConfig& enc, const BacktestOptions& opt,
                        const env::BalanceState* initial = nullptr);

BacktestReport backtest(const train::Checkpoint& ckpt, const data::PreparedData& d, Period period,
                        const encoder::EncoderConfig& enc, const BacktestOptions& opt,
                        const env::BalanceState* initial = nullptr);

struct DisparitySeries {
  std::vector<double> q;     // min_k Q_k(s_t, a_t)
  std::vector<double> tail;  // sum_k gamma^k r_{t+k}, truncated at the end
  std::vector<double> disparity;
  double mean = 0.0;
};

// Critic prediction minus realized discounted return along the backtest
// trajectory of the deterministic actor.
DisparitySeries value_disparity(const sac::AgentParams& agent, const data::PreparedData& d, Period period,
                                double gamma, const encoder::EncoderConfig& enc, const BacktestOptions& opt);

// Discounted tails G_t = r_t + gamma G_{t+1}, G_H = 0.
std::vector<double> discounted_tails(const std::vector<double>& rewards, double gamma);

struct OnlineOptions {
  int splits = 3;
  int context_days = 120;
  int cov_window = 60;
  train::TrainConfig train;
};

struct OnlineReport {
  std::vector<Period> periods;
  std::vector<BacktestReport> splits;
  BacktestReport combined;
};

// Splits `period` into contiguous sub-periods sharing boundary days and
// together covering every step once.
std::vector<Period> split_period(Period period, int splits);

// Backtests each split with capital carried over; before split k > 0 the
// agent is finetuned on split k-1 as an original subset.
OnlineReport online_adapt_eval(const train::Checkpoint& ckpt, const data::PreparedData& d, Period period,
                               const encoder::EncoderConfig& enc, const BacktestOptions& opt,
                               const OnlineOptions& online);

// Concatenates chained reports (each starting where the previous ended).
BacktestReport combine(const std::vector<BacktestReport>& parts, const MetricOptions& opt);

nlohmann::json to_json(const BacktestReport& r);
nlohmann::json to_json(const OnlineReport& r);
// Empty when `j` matches the report schema; otherwise one message per issue.
std::vector<std::string> validate_report_json(const nlohmann::json& j);
void write_value_csv(std::ostream& out, const BacktestReport& r);
void write_disparity_csv(std::ostream& out, const BacktestReport& r, const DisparitySeries& d);

}  // namespace tradelab::eval

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "tradelab/config/pipeline.hpp"
#include "tradelab/error.hpp"
#include "tradelab/eval/backtest.hpp"
#include "tradelab/eval/metrics.hpp"

namespace tl = tradelab;
namespace ev = tradelab::eval;

namespace {

ev::BacktestPolicy constant_policy(double a) {
  return [a](const Eigen::VectorXd&, int, const tl::env::BalanceState& z) {
    return Eigen::VectorXd::Constant(z.holdings.size(), a);
  };
}

// Linear nets with every weight zeroed: the deterministic action is 0 and
// both critics output `c`.
tl::sac::AgentParams flat_agent(const tl::data::PreparedData& d, const tl::config::RunConfig& cfg, double c) {
  const int S = d.panel.num_symbols();
  const tl::sac::AgentSpec spec{tl::encoder::state_dim(S, cfg.encoder.D), S, {}};
  auto agent = tl::sac::make_agent(spec, 1, 0.1, 0.99);
  for (auto* p : {&agent.actor, &agent.critic1, &agent.critic2})
    for (auto& t : p->tensors) t.setZero();
  for (auto* p : {&agent.critic1, &agent.critic2}) p->tensors.back().setConstant(c);
  return agent;
}

}  // namespace

TEST(Metrics, CumReturnExamples) {
  const std::vector<double> flat = {5, 5, 5};
  EXPECT_EQ(ev::cum_return(flat), 0.0);
  const std::vector<double> up = {100, 180, 244};
  EXPECT_NEAR(ev::cum_return(up), 1.44, 1e-12);
  const std::vector<double> down = {100, 50};
  EXPECT_NEAR(ev::cum_return(down), -0.5, 1e-12);
  const std::vector<double> bad = {0, 1};
  EXPECT_THROW(ev::cum_return(bad), tl::ValidationError);
}

TEST(Metrics, AnnualReturnExamples) {
  EXPECT_EQ(ev::annual_return(0.0, 100), 0.0);
  EXPECT_NEAR(ev::annual_return(0.21, 504), 0.1, 1e-12);
  EXPECT_EQ(ev::annual_return(0.37, 252), 0.37);
  EXPECT_THROW(ev::annual_return(-1.0, 10), tl::ValidationError);
  EXPECT_THROW(ev::annual_return(0.1, 0), tl::ValidationError);
  EXPECT_NEAR(ev::annual_return(0.44, 504, 252, true), std::sqrt(0.44) - 1.0, 1e-12);
  EXPECT_THROW(ev::annual_return(-0.1, 504, 252, true), tl::ValidationError);
}

TEST(Metrics, SharpeExamples) {
  const std::vector<double> r = {0.02, 0.00, 0.01};
  const auto s = ev::sharpe(r);
  ASSERT_TRUE(s.value);
  EXPECT_NEAR(*s.value, 19.44, 0.01);
  EXPECT_NEAR(*s.value, oracle::brute_sharpe(r, 0.0, 252), 1e-10);

  const std::vector<double> same = {0.01, 0.01, 0.01};
  const auto z = ev::sharpe(same);
  EXPECT_TRUE(z.zero_variance);
  EXPECT_FALSE(z.value);

  const std::vector<double> alt = {0.01, -0.01, 0.01, -0.01};
  EXPECT_NEAR(*ev::sharpe(alt).value, 0.0, 1e-12);

  const std::vector<double> one = {0.01};
  EXPECT_THROW(ev::sharpe(one), tl::ValidationError);
}

TEST(Metrics, MaxDrawdownExamples) {
  EXPECT_EQ(ev::max_drawdown(std::vector<double>{1, 2, 2, 3}), 0.0);
  EXPECT_NEAR(ev::max_drawdown(std::vector<double>{100, 120, 60, 130}), 0.5, 1e-15);
  EXPECT_NEAR(ev::max_drawdown(std::vector<double>{100, 50, 100, 40}), 0.6, 1e-15);
}

TEST(Metrics, MaxDrawdownMatchesBruteForce) {
  tl::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(60));
    std::vector<double> v(static_cast<std::size_t>(n));
    double a = 100.0;
    for (auto& x : v) {
      a *= std::exp(rng.normal() * 0.05);
      x = a;
    }
    EXPECT_EQ(ev::max_drawdown(v), oracle::brute_max_drawdown(v)) << "trial " << trial;
  }
}

TEST(Metrics, ComputeMetricsFlagsAndLiteral) {
  const std::vector<double> v = {100, 90};
  const std::vector<double> r = {-0.1};
  ev::MetricOptions lit;
  lit.literal_annual_return = true;
  const auto m = ev::compute_metrics(v, r, lit);
  EXPECT_FALSE(m.ar);
  EXPECT_TRUE(m.sr.zero_variance);
  EXPECT_NEAR(m.mdd, 0.1, 1e-15);
  EXPECT_TRUE(ev::compute_metrics(v, r).ar);
}

TEST(Backtest, ZeroActionIsFlat) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto opt = tl::config::backtest_options(s.cfg);
  const auto r = ev::backtest(constant_policy(0.0), s.data, p, s.cfg.encoder, opt);
  EXPECT_EQ(r.metrics.cr, 0.0);
  EXPECT_EQ(r.metrics.mdd, 0.0);
  ASSERT_EQ(r.values.size(), static_cast<std::size_t>(p.steps() + 1));
  for (double v : r.values) EXPECT_EQ(v, s.cfg.env.initial_cash);
  EXPECT_TRUE(r.self_consistent);
  EXPECT_EQ(r.start_date, s.data.panel.dates[static_cast<std::size_t>(p.first)]);
  EXPECT_EQ(r.end_date, s.data.panel.dates[static_cast<std::size_t>(p.last)]);
}

TEST(Backtest, BuyAndHoldMatchesClosedFormGrowth) {
  const double drift = 0.0008;
  auto spec = tl::data::SynthSpec::uniform(1, 300, drift, 0.0, 0.0, 40.0, 5);
  const auto d = fixture::synth_dataset(spec, 60, 20);
  auto s = fixture::tiny_setup();
  const ev::Period p{d.test.begin - 1, d.test.end - 1};
  auto opt = tl::config::backtest_options(s.cfg);
  opt.env.cost_rate = 0.0;
  const double p0 = d.panel.close(p.first, 0);
  opt.env.initial_cash = opt.env.h_max * p0 + 1e-3;
  ev::BacktestPolicy bh = [&](const Eigen::VectorXd&, int day, const tl::env::BalanceState&) {
    return Eigen::VectorXd::Constant(1, day == p.first ? 1.0 : 0.0);
  };
  const auto r = ev::backtest(bh, d, p, s.cfg.encoder, opt);
  EXPECT_EQ(r.final_balance.holdings(0), opt.env.h_max);
  EXPECT_NEAR(r.metrics.cr, std::expm1(drift * p.steps()), 1e-6);
}

TEST(Backtest, Deterministic) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto opt = tl::config::backtest_options(s.cfg);
  const auto ckpt = tl::train::make_checkpoint(tl::config::initial_agent(s.data, s.cfg), {});
  const auto a = ev::backtest(ckpt, s.data, p, s.cfg.encoder, opt);
  const auto b = ev::backtest(ckpt, s.data, p, s.cfg.encoder, opt);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(ev::to_json(a).dump(), ev::to_json(b).dump());
  EXPECT_TRUE(a.self_consistent);
}

TEST(Backtest, RejectsShortWarmUp) {
  const auto s = fixture::tiny_setup();
  const auto opt = tl::config::backtest_options(s.cfg);
  const int warm = ev::first_tradable_day(s.data, s.cfg.encoder);
  try {
    ev::backtest(constant_policy(0.0), s.data, {warm - 1, warm + 10}, s.cfg.encoder, opt);
    FAIL() << "expected an error";
  } catch (const tl::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient warm-up history"), std::string::npos);
  }
  EXPECT_THROW(ev::backtest(constant_policy(0.0), s.data, {warm, s.data.panel.num_days()}, s.cfg.encoder, opt),
               tl::ValidationError);
}

TEST(Backtest, InvalidPolicyOutputIsAnInvariantError) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  ev::BacktestPolicy bad = [](const Eigen::VectorXd&, int, const tl::env::BalanceState&) {
    return Eigen::VectorXd::Constant(1, 0.0);
  };
  EXPECT_THROW(ev::backtest(bad, s.data, p, s.cfg.encoder, tl::config::backtest_options(s.cfg)),
               tl::InvariantError);
}

TEST(Disparity, ConstantCriticGivesConstantDisparity) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto opt = tl::config::backtest_options(s.cfg);
  for (double c : {0.0, 2.5}) {
    const auto ds = ev::value_disparity(flat_agent(s.data, s.cfg, c), s.data, p, 0.9, s.cfg.encoder, opt);
    ASSERT_EQ(ds.disparity.size(), static_cast<std::size_t>(p.steps()));
    for (double x : ds.tail) EXPECT_EQ(x, 0.0);
    for (double x : ds.disparity) EXPECT_EQ(x, c);
    EXPECT_EQ(ds.mean, c);
  }
}

TEST(Disparity, MyopicTailIsTheReward) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto opt = tl::config::backtest_options(s.cfg);
  const auto agent = tl::config::initial_agent(s.data, s.cfg);
  const auto ds = ev::value_disparity(agent, s.data, p, 0.0, s.cfg.encoder, opt);
  const auto r = ev::backtest(ev::deterministic_policy(agent), s.data, p, s.cfg.encoder, opt);
  ASSERT_EQ(ds.tail.size(), r.rewards.size());
  for (std::size_t t = 0; t < r.rewards.size(); ++t) {
    EXPECT_EQ(ds.tail[t], r.rewards[t]);
    EXPECT_EQ(ds.disparity[t], ds.q[t] - r.rewards[t]);
  }
}

TEST(Disparity, DiscountedTails) {
  const auto g = ev::discounted_tails({1.0, 2.0, 4.0}, 0.5);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[2], 4.0);
  EXPECT_DOUBLE_EQ(g[1], 4.0);
  EXPECT_DOUBLE_EQ(g[0], 3.0);
}

TEST(Online, SplitPeriodPartitionsExactly) {
  tl::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int first = static_cast<int>(rng.below(50));
    const int steps = 1 + static_cast<int>(rng.below(200));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(std::min(steps, 8))));
    const auto parts = ev::split_period({first, first + steps}, k);
    ASSERT_EQ(parts.size(), static_cast<std::size_t>(k));
    EXPECT_EQ(parts.front().first, first);
    EXPECT_EQ(parts.back().last, first + steps);
    int total = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      EXPECT_GE(parts[i].steps(), 1);
      if (i > 0) EXPECT_EQ(parts[i].first, parts[i - 1].last);
      total += parts[i].steps();
    }
    EXPECT_EQ(total, steps);
  }
  EXPECT_THROW(ev::split_period({0, 10}, 0), tl::ValidationError);
  EXPECT_THROW(ev::split_period({0, 2}, 3), tl::ValidationError);
}

TEST(Online, NoOpFinetuneEqualsChainedBacktests) {
  auto s = fixture::tiny_setup();
  s.cfg.train.t2 = 0;
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto opt = tl::config::backtest_options(s.cfg);
  const auto ckpt = tl::train::make_checkpoint(tl::config::initial_agent(s.data, s.cfg), {});
  const auto online = ev::online_adapt_eval(ckpt, s.data, p, s.cfg.encoder, opt, tl::config::online_options(s.cfg));
  ASSERT_EQ(online.splits.size(), 3u);
  EXPECT_EQ(online.periods, ev::split_period(p, 3));

  tl::env::BalanceState z = tl::env::BalanceState::all_cash(opt.env.initial_cash, s.data.panel.num_symbols());
  double growth = 1.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto plain = ev::backtest(ckpt, s.data, online.periods[k], s.cfg.encoder, opt, &z);
    EXPECT_TRUE(plain == online.splits[k]) << "split " << k;
    z = plain.final_balance;
    growth *= 1.0 + plain.metrics.cr;
  }
  EXPECT_NEAR(online.combined.metrics.cr, growth - 1.0, 1e-12);

  const auto whole = ev::backtest(ckpt, s.data, p, s.cfg.encoder, opt);
  EXPECT_EQ(online.combined.values, whole.values);
  EXPECT_TRUE(online.combined.self_consistent);
}

TEST(Online, CompoundingIdentityOnRandomSeries) {
  tl::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ev::BacktestReport> parts;
    double a = 1000.0;
    double growth = 1.0;
    int day = 0;
    for (int k = 0; k < 3; ++k) {
      ev::BacktestReport r;
      r.dates.push_back(std::to_string(day));
      r.values.push_back(a);
      const int n = 2 + static_cast<int>(rng.below(20));
      for (int t = 0; t < n; ++t) {
        const double next = a * std::exp(0.02 * rng.normal());
        r.rewards.push_back(next - a);
        r.actions.push_back({0.0});
        a = next;
        r.values.push_back(a);
        r.dates.push_back(std::to_string(++day));
      }
      r.metrics = ev::compute_metrics(r.values, r.rewards);
      growth *= 1.0 + r.metrics.cr;
      parts.push_back(r);
    }
    const auto c = ev::combine(parts, {});
    EXPECT_NEAR(c.metrics.cr, growth - 1.0, 1e-12);
  }
}

TEST(Online, CombineRejectsBrokenChains) {
  ev::BacktestReport a;
  a.dates = {"d0", "d1"};
  a.values = {1.0, 2.0};
  a.rewards = {1.0};
  ev::BacktestReport b = a;
  b.dates = {"d2", "d3"};
  EXPECT_THROW(ev::combine({a, b}, {}), tl::ValidationError);
  EXPECT_THROW(ev::combine({}, {}), tl::ValidationError);
}

TEST(Report, JsonMatchesSchema) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto r = ev::backtest(constant_policy(0.3), s.data, p, s.cfg.encoder, tl::config::backtest_options(s.cfg));
  auto j = ev::to_json(r);
  EXPECT_TRUE(ev::validate_report_json(j).empty());
  EXPECT_EQ(j.at("config_hash"), tl::config::config_hash(s.cfg));

  auto missing = j;
  missing.erase("values");
  EXPECT_FALSE(ev::validate_report_json(missing).empty());
  auto wrong = j;
  wrong["rewards"].push_back(0.0);
  EXPECT_FALSE(ev::validate_report_json(wrong).empty());
  EXPECT_FALSE(ev::validate_report_json(nlohmann::json::array()).empty());
}

TEST(Report, CsvLayout) {
  const auto s = fixture::tiny_setup();
  const auto p = tl::config::evaluation_period(s.data, s.cfg);
  const auto opt = tl::config::backtest_options(s.cfg);
  const auto r = ev::backtest(constant_policy(0.0), s.data, p, s.cfg.encoder, opt);
  std::ostringstream v;
  ev::write_value_csv(v, r);
  std::istringstream in(v.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "date,A_t,r_t");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  EXPECT_EQ(rows, p.steps() + 1);
  EXPECT_EQ(last.back(), ',');

  const auto ds = ev::value_disparity(flat_agent(s.data, s.cfg, 1.0), s.data, p, 0.9, s.cfg.encoder, opt);
  std::ostringstream dcsv;
  ev::write_disparity_csv(dcsv, r, ds);
  EXPECT_EQ(dcsv.str().substr(0, dcsv.str().find('\n')), "date,q,discounted_return,disparity");
}

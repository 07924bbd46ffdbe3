#include "tradelab/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tradelab/error.hpp"

namespace tradelab::env {

void EnvConfig::validate() const {
  if (!(initial_cash > 0.0)) throw ConfigError("env.initial_cash must be positive");
  if (!(cost_rate >= 0.0)) throw ConfigError("env.cost_rate must be >= 0");
  if (!(lot >= 1.0)) throw ConfigError("env.lot must be >= 1");
  if (!(h_max >= lot)) throw ConfigError("env.h_max must be >= env.lot");
}

BalanceState execute_shares(const BalanceState& z, const Vector& requested, const Vector& prices,
                            double cost_rate, double lot, ExecutionReport* report) {
  const auto n = z.holdings.size();
  if (requested.size() != n || prices.size() != n)
    throw ValidationError("trade request width does not match the holdings");
  BalanceState out = z;
  Vector traded = Vector::Zero(n);
  double notional = 0.0;
  double fees = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(requested[i] < 0.0)) continue;
    const double shares = std::min(-requested[i], out.holdings[i]);
    if (shares <= 0.0) continue;
    const double value = shares * prices[i];
    out.holdings[i] -= shares;
    out.cash += value - cost_rate * value;
    traded[i] = -shares;
    notional += value;
    fees += cost_rate * value;
  }

  std::vector<Eigen::Index> buys;
  for (Eigen::Index i = 0; i < n; ++i)
    if (requested[i] > 0.0) buys.push_back(i);
  std::stable_sort(buys.begin(), buys.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return requested[a] > requested[b]; });
  for (auto i : buys) {
    const double unit = prices[i] * (1.0 + cost_rate);
    double shares = requested[i];
    if (shares * unit > out.cash) {
      shares = out.cash / unit;
      if (lot > 0.0) shares = std::floor(shares / lot) * lot;
    }
    if (shares <= 0.0) continue;
    const double value = shares * prices[i];
    out.cash = std::max(0.0, out.cash - value - cost_rate * value);
    out.holdings[i] += shares;
    traded[i] = shares;
    notional += value;
    fees += cost_rate * value;
  }
  if (report) *report = {std::move(traded), notional, fees};
  return out;
}

BalanceState execute(const BalanceState& z, const Vector& a, const Vector& prices,
                     const EnvConfig& cfg, ExecutionReport* report) {
  return execute_shares(z, a * cfg.h_max, prices, cfg.cost_rate, 0.0, report);
}

BalanceState execute_discrete(const BalanceState& z, const Vector& a, const Vector& prices,
                              const EnvConfig& cfg, ExecutionReport* report) {
  return execute_shares(z, discretize_action(a, prices, cfg), prices, cfg.cost_rate, cfg.lot, report);
}

double portfolio_value(const BalanceState& z, const Vector& prices) {
  return z.cash + z.holdings.dot(prices);
}

double reward(const BalanceState& z0, const BalanceState& z1, const Vector& p0, const Vector& p1) {
  const double base = portfolio_value(z0, p0);
  if (!(base > 0.0)) throw ValidationError("reward: portfolio value at t is not positive");
  return portfolio_value(z1, p1) / base - 1.0;
}

Vector discretize_action(const Vector& a, const Vector& /*prices*/, const EnvConfig& cfg) {
  Vector out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out[i] = std::nearbyint(a[i] * cfg.h_max / cfg.lot) * cfg.lot;
  return out;
}

std::vector<Transition> rollout(const transforms::Subset& subset, const Policy& policy,
                                const EnvConfig& cfg) {
  const int L = subset.length();
  if (L < 2) throw ValidationError("rollout needs a subset of at least 2 steps");
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(L - 1));
  BalanceState z = BalanceState::all_cash(cfg.initial_cash, subset.panel.num_symbols());
  for (int t = 0; t + 1 < L; ++t) {
    const Vector p0 = subset.panel.close.row(subset.row(t)).transpose();
    const Vector p1 = subset.panel.close.row(subset.row(t + 1)).transpose();
    Transition tr;
    tr.m = subset.m;
    tr.n = subset.n;
    tr.t = t;
    tr.before = z;
    tr.action = policy(subset, t, z);
    tr.after = execute(z, tr.action, p0, cfg);
    tr.reward = reward(z, tr.after, p0, p1);
    tr.done = t + 2 == L;
    z = tr.after;
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace tradelab::env

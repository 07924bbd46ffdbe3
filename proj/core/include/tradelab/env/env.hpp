#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tradelab/transforms/transforms.hpp"

namespace tradelab::env {

using Vector = Eigen::VectorXd;

struct BalanceState {
  double cash = 0.0;
  Vector holdings;  // shares per symbol, >= 0

  static BalanceState all_cash(double cash, int symbols) { return {cash, Vector::Zero(symbols)}; }
};

struct EnvConfig {
  double initial_cash = 1.0e6;
  double cost_rate = 0.001;  // fraction of traded notional
  double lot = 100.0;        // shares per discretization interval
  double h_max = 1000.0;     // max shares traded per stock per step

  void validate() const;  // throws ConfigError
};

struct ExecutionReport {
  Vector shares;  // signed shares actually traded
  double notional = 0.0;
  double fees = 0.0;
};

// Trades signed share requests at `prices`. Sells run first (capped at
// holdings), then buys in descending request size (ties by index), each
// capped by remaining cash including fees. With lot > 0 a clipped buy is
// rounded down to a multiple of lot.
BalanceState execute_shares(const BalanceState& z, const Vector& requested, const Vector& prices,
                            double cost_rate, double lot = 0.0, ExecutionReport* report = nullptr);

// Continuous execution of a in [-1, 1]^S scaled by h_max.
BalanceState execute(const BalanceState& z, const Vector& a, const Vector& prices,
                     const EnvConfig& cfg, ExecutionReport* report = nullptr);

// Discretized execution used in backtests.
BalanceState execute_discrete(const BalanceState& z, const Vector& a, const Vector& prices,
                              const EnvConfig& cfg, ExecutionReport* report = nullptr);

double portfolio_value(const BalanceState& z, const Vector& prices);

// value(z1, p1) / value(z0, p0) - 1; throws ValidationError when the base
// value is not positive.
double reward(const BalanceState& z0, const BalanceState& z1, const Vector& p0, const Vector& p1);

// round-half-to-even(a * h_max / lot) * lot per symbol. Prices are accepted
// for interface symmetry and do not affect the result.
Vector discretize_action(const Vector& a, const Vector& prices, const EnvConfig& cfg);

struct Transition {
  int m = 0;
  int n = 0;
  int t = 0;
  BalanceState before;
  BalanceState after;
  Vector action;
  double reward = 0.0;
  bool done = false;
};

using Policy = std::function<Vector(const transforms::Subset&, int step, const BalanceState&)>;

// Replays the subset from an all-cash state with continuous execution; one
// transition per step except the last.
std::vector<Transition> rollout(const transforms::Subset& subset, const Policy& policy,
                                const EnvConfig& cfg);

}  // namespace tradelab::env

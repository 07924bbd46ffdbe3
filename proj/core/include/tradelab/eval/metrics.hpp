#pragma once

#include <optional>
#include <span>

namespace tradelab::eval {

inline constexpr int kTradingDaysPerYear = 252;

// A_H / A_0 - 1. Throws ValidationError when A_0 <= 0.
double cum_return(std::span<const double> values);

// (1 + CR)^(d/t) - 1; with `literal` the base is CR itself, which is only
// defined for CR > 0.
double annual_return(double cr, int t, int d = kTradingDaysPerYear, bool literal = false);

struct Sharpe {
  std::optional<double> value;  // empty when the returns have zero variance
  bool zero_variance = false;
};

// mean(r - rf/d) / popstd(r) * sqrt(d). Needs at least two returns.
Sharpe sharpe(std::span<const double> daily_returns, double risk_free = 0.0, int d = kTradingDaysPerYear);

// max_t (peak_t - A_t) / peak_t with a running peak.
double max_drawdown(std::span<const double> values);

struct MetricOptions {
  int trading_days_per_year = kTradingDaysPerYear;
  double risk_free = 0.0;
  bool literal_annual_return = false;
};

struct Metrics {
  double cr = 0.0;
  std::optional<double> ar;  // empty when undefined (literal form with CR <= 0)
  Sharpe sr;
  double mdd = 0.0;

  friend bool operator==(const Metrics& a, const Metrics& b) {
    return a.cr == b.cr && a.ar == b.ar && a.sr.value == b.sr.value &&
           a.sr.zero_variance == b.sr.zero_variance && a.mdd == b.mdd;
  }
};

// Metrics of a value series A_0..A_H and its H step returns.
Metrics compute_metrics(std::span<const double> values, std::span<const double> returns,
                        const MetricOptions& opt = {});

}  // namespace tradelab::eval

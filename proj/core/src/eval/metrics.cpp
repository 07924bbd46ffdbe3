#include "tradelab/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tradelab/error.hpp"

namespace tradelab::eval {

double cum_return(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cum_return: empty value series");
  if (!(values.front() > 0.0)) throw ValidationError("cum_return: initial value must be positive");
  return values.back() / values.front() - 1.0;
}

double annual_return(double cr, int t, int d, bool literal) {
  if (t <= 0) throw ValidationError("annual_return: period length must be positive");
  if (literal) {
    if (!(cr > 0.0)) throw ValidationError("annual_return: literal form needs CR > 0");
    return std::pow(cr, static_cast<double>(d) / t) - 1.0;
  }
  if (!(cr > -1.0)) throw ValidationError("annual_return: CR must exceed -1");
  if (t == d) return cr;
  return std::pow(1.0 + cr, static_cast<double>(d) / t) - 1.0;
}

Sharpe sharpe(std::span<const double> r, double risk_free, int d) {
  if (r.size() < 2) throw ValidationError("sharpe: need at least two returns");
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  if (*lo == *hi) return {std::nullopt, true};
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : r) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0.0) return {std::nullopt, true};
  return {(mean - risk_free / d) / sd * std::sqrt(static_cast<double>(d)), false};
}

double max_drawdown(std::span<const double> values) {
  if (values.empty()) throw ValidationError("max_drawdown: empty value series");
  double peak = values.front();
  double mdd = 0.0;
  for (double v : values) {
    peak = std::max(peak, v);
    mdd = std::max(mdd, (peak - v) / peak);
  }
  return mdd;
}

Metrics compute_metrics(std::span<const double> values, std::span<const double> returns,
                        const MetricOptions& opt) {
  Metrics m;
  m.cr = cum_return(values);
  const int t = static_cast<int>(values.size()) - 1;
  if (t > 0 && (!opt.literal_annual_return || m.cr > 0.0) && m.cr > -1.0)
    m.ar = annual_return(m.cr, t, opt.trading_days_per_year, opt.literal_annual_return);
  if (returns.size() >= 2)
    m.sr = sharpe(returns, opt.risk_free, opt.trading_days_per_year);
  else
    m.sr = {std::nullopt, true};
  m.mdd = max_drawdown(values);
  return m;
}

}  // namespace tradelab::eval

#include "tradelab/data/indicators.hpp"

#include <cmath>
#include <limits>

#include "tradelab/error.hpp"

namespace tradelab::data {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> column(const Matrix& m, int c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

}  // namespace

std::vector<double> sma(std::span<const double> x, int window) {
  const auto n = x.size();
  std::vector<double> out(n, kNaN);
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t t = w - 1; t < n && w > 0; ++t) {
    double s = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) s += x[k];
    out[t] = s / window;
  }
  return out;
}

std::vector<double> ema(std::span<const double> x, int span) {
  const auto n = x.size();
  std::vector<double> out(n, kNaN);
  const auto w = static_cast<std::size_t>(span);
  if (n < w) return out;
  const double alpha = 2.0 / (span + 1.0);
  double s = 0.0;
  for (std::size_t k = 0; k < w; ++k) s += x[k];
  double e = s / span;
  out[w - 1] = e;
  for (std::size_t t = w; t < n; ++t) {
    e = alpha * x[t] + (1.0 - alpha) * e;
    out[t] = e;
  }
  return out;
}

std::vector<double> rolling_std(std::span<const double> x, int window) {
  const auto n = x.size();
  std::vector<double> out(n, kNaN);
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t t = w - 1; t < n && w > 1; ++t) {
    double mean = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) mean += x[k];
    mean /= window;
    double ss = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) ss += (x[k] - mean) * (x[k] - mean);
    out[t] = std::sqrt(ss / (window - 1));
  }
  return out;
}

std::vector<double> rsi_wilder(std::span<const double> close, int window) {
  const auto n = close.size();
  std::vector<double> out(n, kNaN);
  const auto w = static_cast<std::size_t>(window);
  if (n <= w) return out;
  auto value = [](double gain, double loss) {
    if (gain == 0.0 && loss == 0.0) return 50.0;
    if (loss == 0.0) return 100.0;
    return 100.0 - 100.0 / (1.0 + gain / loss);
  };
  double gain = 0.0, loss = 0.0;
  for (std::size_t t = 1; t <= w; ++t) {
    const double d = close[t] - close[t - 1];
    gain += std::max(d, 0.0);
    loss += std::max(-d, 0.0);
  }
  gain /= window;
  loss /= window;
  out[w] = value(gain, loss);
  for (std::size_t t = w + 1; t < n; ++t) {
    const double d = close[t] - close[t - 1];
    gain = (gain * (window - 1) + std::max(d, 0.0)) / window;
    loss = (loss * (window - 1) + std::max(-d, 0.0)) / window;
    out[t] = value(gain, loss);
  }
  return out;
}

std::vector<double> cci(std::span<const double> high, std::span<const double> low,
                        std::span<const double> close, int window) {
  const auto n = close.size();
  std::vector<double> tp(n);
  for (std::size_t t = 0; t < n; ++t) tp[t] = (high[t] + low[t] + close[t]) / 3.0;
  std::vector<double> out(n, kNaN);
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t t = w - 1; t < n; ++t) {
    double mean = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) mean += tp[k];
    mean /= window;
    double mad = 0.0;
    for (std::size_t k = t + 1 - w; k <= t; ++k) mad += std::abs(tp[k] - mean);
    mad /= window;
    out[t] = mad == 0.0 ? 0.0 : (tp[t] - mean) / (0.015 * mad);
  }
  return out;
}

std::vector<double> dx_wilder(std::span<const double> high, std::span<const double> low,
                              std::span<const double> close, int window) {
  const auto n = close.size();
  std::vector<double> out(n, kNaN);
  const auto w = static_cast<std::size_t>(window);
  if (n <= w) return out;
  std::vector<double> pdm(n, 0.0), mdm(n, 0.0), tr(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    const double up = high[t] - high[t - 1];
    const double down = low[t - 1] - low[t];
    pdm[t] = (up > down && up > 0.0) ? up : 0.0;
    mdm[t] = (down > up && down > 0.0) ? down : 0.0;
    tr[t] = std::max({high[t] - low[t], std::abs(high[t] - close[t - 1]),
                      std::abs(low[t] - close[t - 1])});
  }
  auto dx = [](double p, double m, double r) {
    if (r <= 0.0) return 0.0;
    const double pdi = 100.0 * p / r;
    const double mdi = 100.0 * m / r;
    return pdi + mdi == 0.0 ? 0.0 : 100.0 * std::abs(pdi - mdi) / (pdi + mdi);
  };
  double sp = 0.0, sm = 0.0, sr = 0.0;
  for (std::size_t t = 1; t <= w; ++t) {
    sp += pdm[t];
    sm += mdm[t];
    sr += tr[t];
  }
  sp /= window;
  sm /= window;
  sr /= window;
  out[w] = dx(sp, sm, sr);
  for (std::size_t t = w + 1; t < n; ++t) {
    sp = (sp * (window - 1) + pdm[t]) / window;
    sm = (sm * (window - 1) + mdm[t]) / window;
    sr = (sr * (window - 1) + tr[t]) / window;
    out[t] = dx(sp, sm, sr);
  }
  return out;
}

IndicatorPanel IndicatorPanel::slice_days(int begin, int end) const {
  IndicatorPanel out;
  for (const auto& m : values) out.values.push_back(m.middleRows(begin, end - begin));
  return out;
}

IndicatorPanel compute_indicators_unchecked(const PanelData& panel) {
  const int days = panel.num_days();
  const int syms = panel.num_symbols();
  IndicatorPanel out;
  out.values.assign(kNumIndicators, Matrix::Constant(days, syms, kNaN));
  for (int s = 0; s < syms; ++s) {
    const auto c = column(panel.close, s);
    const auto h = column(panel.high, s);
    const auto l = column(panel.low, s);
    const auto e12 = ema(c, 12);
    const auto e26 = ema(c, 26);
    const auto mid = sma(c, 20);
    const auto sd = rolling_std(c, 20);
    const auto rsi = rsi_wilder(c, 30);
    const auto cc = cci(h, l, c, 30);
    const auto dx = dx_wilder(h, l, c, 30);
    const auto s30 = sma(c, 30);
    const auto s60 = sma(c, 60);
    for (int t = 0; t < days; ++t) {
      const auto i = static_cast<std::size_t>(t);
      out.values[kMacd](t, s) = e12[i] - e26[i];
      out.values[kBollUb](t, s) = mid[i] + 2.0 * sd[i];
      out.values[kBollLb](t, s) = mid[i] - 2.0 * sd[i];
      out.values[kRsi30](t, s) = rsi[i];
      out.values[kCci30](t, s) = cc[i];
      out.values[kDx30](t, s) = dx[i];
      out.values[kSma30](t, s) = s30[i];
      out.values[kSma60](t, s) = s60[i];
    }
  }
  return out;
}

IndicatorPanel compute_indicators(const PanelData& panel) {
  if (panel.num_days() < kLongestIndicatorWindow)
    throw ValidationError("indicators need at least " + std::to_string(kLongestIndicatorWindow) +
                          " days, panel has " + std::to_string(panel.num_days()));
  return compute_indicators_unchecked(panel);
}

}  // namespace tradelab::data

namespace tradelab::data {

IndicatorStats indicator_stats(const IndicatorPanel& ind, DayRange range) {
  const int syms = ind.num_symbols();
  IndicatorStats st{Matrix::Zero(syms, kNumIndicators), Matrix::Zero(syms, kNumIndicators)};
  for (int k = 0; k < kNumIndicators; ++k) {
    const auto& m = ind.values[static_cast<std::size_t>(k)];
    for (int s = 0; s < syms; ++s) {
      double sum = 0.0;
      int n = 0;
      for (int t = range.begin; t < range.end; ++t)
        if (!std::isnan(m(t, s))) {
          sum += m(t, s);
          ++n;
        }
      if (n == 0) continue;
      const double mean = sum / n;
      double ss = 0.0;
      for (int t = range.begin; t < range.end; ++t)
        if (!std::isnan(m(t, s))) ss += (m(t, s) - mean) * (m(t, s) - mean);
      st.mean(s, k) = mean;
      st.stddev(s, k) = std::sqrt(ss / n);
    }
  }
  return st;
}

}  // namespace tradelab::data

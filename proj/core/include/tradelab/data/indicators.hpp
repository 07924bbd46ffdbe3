#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "tradelab/data/panel.hpp"

namespace tradelab::data {

inline constexpr int kNumIndicators = 8;
inline constexpr int kLongestIndicatorWindow = 60;

inline constexpr std::array<std::string_view, kNumIndicators> kIndicatorNames = {
    "macd", "boll_ub", "boll_lb", "rsi_30", "cci_30", "dx_30", "close_30_sma", "close_60_sma"};

enum Indicator : int { kMacd, kBollUb, kBollLb, kRsi30, kCci30, kDx30, kSma30, kSma60 };

// First row index at which each indicator is defined.
inline constexpr std::array<int, kNumIndicators> kIndicatorWarmup = {25, 19, 19, 30, 29, 30, 29, 59};

// One [days x symbols] matrix per indicator, in kIndicatorNames order.
// Warm-up rows are NaN.
struct IndicatorPanel {
  std::vector<Matrix> values;

  int num_days() const { return values.empty() ? 0 : static_cast<int>(values[0].rows()); }
  int num_symbols() const { return values.empty() ? 0 : static_cast<int>(values[0].cols()); }
  double at(int day, int symbol, int indicator) const {
    return values[static_cast<std::size_t>(indicator)](day, symbol);
  }
  IndicatorPanel slice_days(int begin, int end) const;
};

// Requires at least kLongestIndicatorWindow days.
IndicatorPanel compute_indicators(const PanelData& panel);
// Same formulas on any length; rows shorter than a window stay NaN.
IndicatorPanel compute_indicators_unchecked(const PanelData& panel);

// Single-series building blocks (exposed for tests and benchmarks).
std::vector<double> sma(std::span<const double> x, int window);
std::vector<double> ema(std::span<const double> x, int span);
std::vector<double> rolling_std(std::span<const double> x, int window);  // ddof = 1
std::vector<double> rsi_wilder(std::span<const double> close, int window);
std::vector<double> cci(std::span<const double> high, std::span<const double> low,
                        std::span<const double> close, int window);
std::vector<double> dx_wilder(std::span<const double> high, std::span<const double> low,
                              std::span<const double> close, int window);

}  // namespace tradelab::data

namespace tradelab::data {

// Per-(symbol, indicator) mean and population std over the non-NaN rows of
// `range`; [symbols x kNumIndicators].
struct IndicatorStats {
  Matrix mean;
  Matrix stddev;
};

IndicatorStats indicator_stats(const IndicatorPanel& ind, DayRange range);

}  // namespace tradelab::data

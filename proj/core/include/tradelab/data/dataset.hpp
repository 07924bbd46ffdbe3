#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "tradelab/data/covariance.hpp"
#include "tradelab/data/indicators.hpp"
#include "tradelab/data/panel.hpp"
#include "tradelab/data/preprocess.hpp"
#include "tradelab/diff/container.hpp"

namespace tradelab::data {

struct PrepareConfig {
  double min_coverage = 0.98;
  int cov_window = 60;
  int test_days = 128;  // trailing days held out; the rest is the training range
};

// Output of the preparation pipeline. `panel` is the filtered, interpolated
// raw panel; derived series cover every day of it.
struct PreparedData {
  PanelData panel;
  NormalizedPanel normalized;
  IndicatorPanel indicators;
  CovSeries covariance;
  IndicatorStats indicator_stats;  // over the training range
  DayRange train;
  DayRange test;
  int raw_symbols = 0;  // universe size before coverage filtering
};

// load -> filter -> interpolate -> indicators -> covariance -> normalize.
// Coverage and normalization constants use the training range only. When
// `index_returns` is empty, equal_weight_index_returns of the filtered
// panel stands in for the market index.
PreparedData prepare(const PanelData& raw, const PrepareConfig& cfg,
                     std::span<const double> index_returns = {});

diff::Container to_container(const PreparedData& d);
PreparedData from_container(const diff::Container& c);

void save_dataset(const std::filesystem::path& path, const PreparedData& d);
PreparedData load_dataset(const std::filesystem::path& path);

}  // namespace tradelab::data

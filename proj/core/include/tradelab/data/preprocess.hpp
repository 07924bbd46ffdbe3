#pragma once

#include <span>
#include <vector>

#include "tradelab/data/panel.hpp"

namespace tradelab::data {

// Keeps symbols whose fraction of valid days within `range` is at least
// `min_coverage`; column order is preserved. Throws if nothing survives.
PanelData filter_universe(const PanelData& panel, double min_coverage, DayRange range);
PanelData filter_universe(const PanelData& panel, double min_coverage);

// Fills invalid cells after a symbol's first valid day by chaining the
// previous close with the day's market-index return; open/high/low copy the
// interpolated close and volume is 0. Validity flags are left untouched.
PanelData interpolate_missing(const PanelData& panel, std::span<const double> index_returns);

// Equal-weighted mean close-to-close return over symbols valid on both days;
// 0 on the first day and on days with no such symbol. Used as the market
// index proxy when no index series is supplied.
std::vector<double> equal_weight_index_returns(const PanelData& panel);

struct NormalizationConstants {
  Eigen::VectorXd min_low;
  Eigen::VectorXd max_high;
  Eigen::VectorXd min_volume;
  Eigen::VectorXd max_volume;
};

struct NormalizedPanel {
  PanelData values;  // open/high/low/close/volume mapped with `constants`
  NormalizationConstants constants;
  bool exceeds_unit_range = false;  // some value fell outside [0, 1]
};

// Per-symbol extrema over valid cells of `fit`. All four prices share the
// (min low, max high) factor. Throws ValidationError naming the symbol when
// a range is degenerate.
NormalizationConstants fit_normalization(const PanelData& panel, DayRange fit);

// Applies frozen constants; values outside the fitting range are not
// clamped.
NormalizedPanel normalize(const PanelData& panel, const NormalizationConstants& constants);
NormalizedPanel normalize(const PanelData& panel);  // fit on the whole panel
PanelData denormalize(const NormalizedPanel& normalized);

}  // namespace tradelab::data

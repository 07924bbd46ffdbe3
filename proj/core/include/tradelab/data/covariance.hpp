#pragma once

#include <vector>

#include "tradelab/data/panel.hpp"

namespace tradelab::data {

// Per-day sample covariance of closing prices over a trailing window.
// matrices[t] covers days [t - window + 1, t]; earlier entries are NaN.
struct CovSeries {
  int window = 0;
  std::vector<Matrix> matrices;

  int num_days() const { return static_cast<int>(matrices.size()); }
};

CovSeries rolling_covariance(const PanelData& panel, int window);
// Same, without requiring panel length >= window.
CovSeries rolling_covariance_unchecked(const PanelData& panel, int window);

}  // namespace tradelab::data

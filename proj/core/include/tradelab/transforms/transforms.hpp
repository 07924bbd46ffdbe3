#pragma once

#include <optional>
#include <vector>

#include "tradelab/data/covariance.hpp"
#include "tradelab/data/indicators.hpp"
#include "tradelab/data/panel.hpp"

namespace tradelab::transforms {

enum Tag : int { kOriginal = 0, kInvertGainers = 1, kReverse = 2, kDownsample = 3 };
inline constexpr int kNumTransforms = 3;

struct TransformConfig {
  double alpha = 10.0;  // percent of stocks inverted by F1
  int T = 64;
  int delta = 4;

  void validate() const;  // throws ConfigError
};

// T consecutive days of market data D_{m,n}. `panel` holds `context` rows
// of untouched history followed by the subset's own steps; transforms only
// rewrite the step rows. Indicators and covariance are computed over the
// whole panel, so step t reads row context + t.
struct Subset {
  int m = 0;
  int n = kOriginal;
  int context = 0;
  data::PanelData panel;
  data::IndicatorPanel indicators;
  data::CovSeries covariance;
  std::vector<int> index_map;  // source-panel day of each step

  int length() const { return panel.num_days() - context; }
  int row(int step) const { return context + step; }
};

struct PartitionOptions {
  int start_day = 0;     // first step row of subset 0
  int context_days = 0;  // history rows kept before each subset; <= start_day
  int cov_window = 60;
};

// Consecutive non-overlapping T-step windows from `start_day`; a trailing
// remainder shorter than T is dropped.
std::vector<Subset> partition(const data::PanelData& panel, int T, const PartitionOptions& opt = {});

Subset f1_invert_top_gainers(const Subset& s, double alpha);
Subset f2_reverse(const Subset& s);
Subset f3_downsample(const Subset& s, int delta);

// For each input m: tags 0 (unchanged), 1, 2, 3 in that order.
std::vector<Subset> expand(const std::vector<Subset>& subsets, const TransformConfig& cfg);

// Step of the transformed subset aligned with original step t; nullopt when
// the transform has no counterpart (off-grid downsampling step).
std::optional<int> align_index(int t, int n, const TransformConfig& cfg);

bool bit_equal(const Subset& a, const Subset& b);

}  // namespace tradelab::transforms

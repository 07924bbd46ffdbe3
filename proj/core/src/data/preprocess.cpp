#include "tradelab/data/preprocess.hpp"

#include <cmath>
#include <limits>

#include "tradelab/error.hpp"

namespace tradelab::data {

PanelData filter_universe(const PanelData& panel, double min_coverage, DayRange range) {
  if (!(min_coverage > 0.0 && min_coverage <= 1.0))
    throw ValidationError("min_coverage must lie in (0, 1]");
  if (range.begin < 0 || range.end > panel.num_days() || range.size() <= 0)
    throw ValidationError("coverage range outside panel");
  std::vector<int> keep;
  const double days = range.size();
  for (int s = 0; s < panel.num_symbols(); ++s) {
    const auto count = panel.valid.col(s).segment(range.begin, range.size()).count();
    if (static_cast<double>(count) >= min_coverage * days - 1e-9) keep.push_back(s);
  }
  if (keep.empty()) throw ValidationError("empty universe: no symbol meets the coverage threshold");
  return panel.select_symbols(keep);
}

PanelData filter_universe(const PanelData& panel, double min_coverage) {
  return filter_universe(panel, min_coverage, DayRange{0, panel.num_days()});
}

PanelData interpolate_missing(const PanelData& panel, std::span<const double> index_returns) {
  if (static_cast<int>(index_returns.size()) != panel.num_days())
    throw ValidationError("index return series length " + std::to_string(index_returns.size()) +
                          " does not cover " + std::to_string(panel.num_days()) + " panel days");
  PanelData out = panel;
  for (int s = 0; s < panel.num_symbols(); ++s) {
    int first = 0;
    while (first < panel.num_days() && !panel.valid(first, s)) ++first;
    if (first > 0)
      throw ValidationError("symbol " + panel.symbols[static_cast<std::size_t>(s)] +
                            " has missing data before its first observation on " +
                            (first < panel.num_days() ? panel.dates[static_cast<std::size_t>(first)]
                                                      : std::string("(never)")) +
                            "; no interpolation anchor");
    for (int d = 1; d < panel.num_days(); ++d) {
      if (panel.valid(d, s)) continue;
      const double c = out.close(d - 1, s) * (1.0 + index_returns[static_cast<std::size_t>(d)]);
      out.close(d, s) = c;
      out.open(d, s) = c;
      out.high(d, s) = c;
      out.low(d, s) = c;
      out.volume(d, s) = 0.0;
    }
  }
  return out;
}

std::vector<double> equal_weight_index_returns(const PanelData& panel) {
  std::vector<double> r(static_cast<std::size_t>(panel.num_days()), 0.0);
  for (int d = 1; d < panel.num_days(); ++d) {
    double sum = 0.0;
    int n = 0;
    for (int s = 0; s < panel.num_symbols(); ++s) {
      if (panel.valid(d, s) && panel.valid(d - 1, s)) {
        sum += panel.close(d, s) / panel.close(d - 1, s) - 1.0;
        ++n;
      }
    }
    if (n > 0) r[static_cast<std::size_t>(d)] = sum / n;
  }
  return r;
}

NormalizationConstants fit_normalization(const PanelData& panel, DayRange fit) {
  if (fit.begin < 0 || fit.end > panel.num_days() || fit.size() <= 0)
    throw ValidationError("normalization fitting range outside panel");
  const auto n = panel.num_symbols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  NormalizationConstants c{Eigen::VectorXd::Constant(n, inf), Eigen::VectorXd::Constant(n, -inf),
                           Eigen::VectorXd::Constant(n, inf), Eigen::VectorXd::Constant(n, -inf)};
  for (int d = fit.begin; d < fit.end; ++d) {
    for (int s = 0; s < n; ++s) {
      if (!panel.valid(d, s)) continue;
      c.min_low[s] = std::min(c.min_low[s], panel.low(d, s));
      c.max_high[s] = std::max(c.max_high[s], panel.high(d, s));
      c.min_volume[s] = std::min(c.min_volume[s], panel.volume(d, s));
      c.max_volume[s] = std::max(c.max_volume[s], panel.volume(d, s));
    }
  }
  for (int s = 0; s < n; ++s) {
    const auto& name = panel.symbols[static_cast<std::size_t>(s)];
    if (!(c.max_high[s] > c.min_low[s]))
      throw ValidationError("degenerate price range for symbol " + name);
    if (!(c.max_volume[s] > c.min_volume[s]))
      throw ValidationError("degenerate volume range for symbol " + name);
  }
  return c;
}

NormalizedPanel normalize(const PanelData& panel, const NormalizationConstants& constants) {
  if (constants.min_low.size() != panel.num_symbols())
    throw ValidationError("normalization constants do not match the symbol count");
  NormalizedPanel out{panel, constants, false};
  auto& v = out.values;
  for (int s = 0; s < panel.num_symbols(); ++s) {
    const double lo = constants.min_low[s];
    const double span = constants.max_high[s] - lo;
    const double vlo = constants.min_volume[s];
    const double vspan = constants.max_volume[s] - vlo;
    v.open.col(s) = (panel.open.col(s).array() - lo) / span;
    v.high.col(s) = (panel.high.col(s).array() - lo) / span;
    v.low.col(s) = (panel.low.col(s).array() - lo) / span;
    v.close.col(s) = (panel.close.col(s).array() - lo) / span;
    v.volume.col(s) = (panel.volume.col(s).array() - vlo) / vspan;
  }
  for (const Matrix* m : {&v.open, &v.high, &v.low, &v.close, &v.volume}) {
    // NaN cells (missing, not interpolated) compare false on both sides.
    if (((m->array() < 0.0) || (m->array() > 1.0)).any()) out.exceeds_unit_range = true;
  }
  return out;
}

NormalizedPanel normalize(const PanelData& panel) {
  return normalize(panel, fit_normalization(panel, DayRange{0, panel.num_days()}));
}

PanelData denormalize(const NormalizedPanel& normalized) {
  PanelData p = normalized.values;
  const auto& c = normalized.constants;
  for (int s = 0; s < p.num_symbols(); ++s) {
    const double lo = c.min_low[s];
    const double span = c.max_high[s] - lo;
    const double vlo = c.min_volume[s];
    const double vspan = c.max_volume[s] - vlo;
    p.open.col(s) = normalized.values.open.col(s).array() * span + lo;
    p.high.col(s) = normalized.values.high.col(s).array() * span + lo;
    p.low.col(s) = normalized.values.low.col(s).array() * span + lo;
    p.close.col(s) = normalized.values.close.col(s).array() * span + lo;
    p.volume.col(s) = normalized.values.volume.col(s).array() * vspan + vlo;
  }
  return p;
}

}  // namespace tradelab::data

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tradelab::data {

using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Half-open range of day indices [begin, end).
struct DayRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool contains(int d) const { return d >= begin && d < end; }
  friend bool operator==(const DayRange&, const DayRange&) = default;
};

// Aligned per-day, per-symbol OHLCV table. Matrices are [days x symbols].
// Cells absent from the source are flagged invalid; their prices are NaN
// until interpolated.
struct PanelData {
  std::vector<std::string> dates;
  std::vector<std::string> symbols;
  Matrix open;
  Matrix high;
  Matrix low;
  Matrix close;
  Matrix volume;
  Mask valid;

  int num_days() const { return static_cast<int>(dates.size()); }
  int num_symbols() const { return static_cast<int>(symbols.size()); }

  static PanelData empty(std::vector<std::string> dates, std::vector<std::string> symbols);

  PanelData slice_days(int begin, int end) const;
  PanelData select_symbols(const std::vector<int>& columns) const;
  // Rows of `other` appended after this panel's rows; symbols must match.
  PanelData concat_days(const PanelData& other) const;

  // Throws ValidationError if shapes disagree, dates are not strictly
  // increasing, or a valid cell breaks positivity / high-low bracketing.
  void validate() const;

  int day_index(const std::string& date) const;  // -1 if absent
};

bool bit_equal(const Matrix& a, const Matrix& b);
bool bit_equal(const PanelData& a, const PanelData& b);

}  // namespace tradelab::data

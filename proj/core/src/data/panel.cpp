#include "tradelab/data/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "tradelab/error.hpp"

namespace tradelab::data {

namespace {

Matrix nan_matrix(Eigen::Index rows, Eigen::Index cols) {
  return Matrix::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
}

template <typename M>
M take_rows(const M& m, int begin, int end) {
  return m.middleRows(begin, end - begin);
}

template <typename M>
M take_cols(const M& m, const std::vector<int>& cols) {
  M out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

template <typename M>
M stack_rows(const M& a, const M& b) {
  M out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace

PanelData PanelData::empty(std::vector<std::string> dates, std::vector<std::string> symbols) {
  PanelData p;
  const auto rows = static_cast<Eigen::Index>(dates.size());
  const auto cols = static_cast<Eigen::Index>(symbols.size());
  p.dates = std::move(dates);
  p.symbols = std::move(symbols);
  p.open = nan_matrix(rows, cols);
  p.high = nan_matrix(rows, cols);
  p.low = nan_matrix(rows, cols);
  p.close = nan_matrix(rows, cols);
  p.volume = nan_matrix(rows, cols);
  p.valid = Mask::Constant(rows, cols, false);
  return p;
}

PanelData PanelData::slice_days(int begin, int end) const {
  if (begin < 0 || end > num_days() || begin > end)
    throw ValidationError("slice_days: range [" + std::to_string(begin) + ", " +
                          std::to_string(end) + ") outside panel of " +
                          std::to_string(num_days()) + " days");
  PanelData p;
  p.dates.assign(dates.begin() + begin, dates.begin() + end);
  p.symbols = symbols;
  p.open = take_rows(open, begin, end);
  p.high = take_rows(high, begin, end);
  p.low = take_rows(low, begin, end);
  p.close = take_rows(close, begin, end);
  p.volume = take_rows(volume, begin, end);
  p.valid = take_rows(valid, begin, end);
  return p;
}

PanelData PanelData::select_symbols(const std::vector<int>& columns) const {
  PanelData p;
  p.dates = dates;
  for (int c : columns) p.symbols.push_back(symbols.at(static_cast<std::size_t>(c)));
  p.open = take_cols(open, columns);
  p.high = take_cols(high, columns);
  p.low = take_cols(low, columns);
  p.close = take_cols(close, columns);
  p.volume = take_cols(volume, columns);
  p.valid = take_cols(valid, columns);
  return p;
}

PanelData PanelData::concat_days(const PanelData& other) const {
  if (other.symbols != symbols) throw ValidationError("concat_days: symbol lists differ");
  PanelData p;
  p.dates = dates;
  p.dates.insert(p.dates.end(), other.dates.begin(), other.dates.end());
  p.symbols = symbols;
  p.open = stack_rows(open, other.open);
  p.high = stack_rows(high, other.high);
  p.low = stack_rows(low, other.low);
  p.close = stack_rows(close, other.close);
  p.volume = stack_rows(volume, other.volume);
  p.valid = stack_rows(valid, other.valid);
  return p;
}

void PanelData::validate() const {
  const auto rows = static_cast<Eigen::Index>(dates.size());
  const auto cols = static_cast<Eigen::Index>(symbols.size());
  auto check_shape = [&](Eigen::Index r, Eigen::Index c, const char* name) {
    if (r != rows || c != cols)
      throw ValidationError(std::string("panel field '") + name + "' has shape " +
                            std::to_string(r) + "x" + std::to_string(c) + ", expected " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  };
  check_shape(open.rows(), open.cols(), "open");
  check_shape(high.rows(), high.cols(), "high");
  check_shape(low.rows(), low.cols(), "low");
  check_shape(close.rows(), close.cols(), "close");
  check_shape(volume.rows(), volume.cols(), "volume");
  check_shape(valid.rows(), valid.cols(), "valid");
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (!(dates[i - 1] < dates[i]))
      throw ValidationError("dates not strictly increasing at " + dates[i]);
  for (Eigen::Index d = 0; d < rows; ++d) {
    for (Eigen::Index s = 0; s < cols; ++s) {
      if (!valid(d, s)) continue;
      const double o = open(d, s), h = high(d, s), l = low(d, s), c = close(d, s);
      const std::string where = symbols[static_cast<std::size_t>(s)] + " on " +
                                dates[static_cast<std::size_t>(d)];
      if (!(o > 0.0 && h > 0.0 && l > 0.0 && c > 0.0))
        throw ValidationError("nonpositive price for " + where);
      if (h < std::max(o, c) || l > std::min(o, c))
        throw ValidationError("high/low do not bracket open/close for " + where);
      if (!(volume(d, s) >= 0.0)) throw ValidationError("negative volume for " + where);
    }
  }
}

int PanelData::day_index(const std::string& date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) return -1;
  return static_cast<int>(it - dates.begin());
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bit_equal(const PanelData& a, const PanelData& b) {
  return a.dates == b.dates && a.symbols == b.symbols && bit_equal(a.open, b.open) &&
         bit_equal(a.high, b.high) && bit_equal(a.low, b.low) && bit_equal(a.close, b.close) &&
         bit_equal(a.volume, b.volume) && (a.valid == b.valid).all();
}

}  // namespace tradelab::data

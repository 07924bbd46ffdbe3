#include "tradelab/data/covariance.hpp"

#include <limits>

#include "tradelab/error.hpp"

namespace tradelab::data {

CovSeries rolling_covariance_unchecked(const PanelData& panel, int window) {
  if (window < 2) throw ValidationError("covariance window must be at least 2");
  const int days = panel.num_days();
  const int syms = panel.num_symbols();
  CovSeries out{window, {}};
  out.matrices.reserve(static_cast<std::size_t>(days));
  const Matrix nan = Matrix::Constant(syms, syms, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < days; ++t) {
    if (t < window - 1) {
      out.matrices.push_back(nan);
      continue;
    }
    const auto block = panel.close.middleRows(t - window + 1, window);
    const Eigen::RowVectorXd mean = block.colwise().mean();
    const Matrix centered = block.rowwise() - mean;
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(window - 1);
    cov = 0.5 * (cov + cov.transpose()).eval();
    out.matrices.push_back(std::move(cov));
  }
  return out;
}

CovSeries rolling_covariance(const PanelData& panel, int window) {
  if (window < 2 || window > panel.num_days())
    throw ValidationError("covariance window " + std::to_string(window) +
                          " out of range for a panel of " + std::to_string(panel.num_days()) +
                          " days");
  return rolling_covariance_unchecked(panel, window);
}

}  // namespace tradelab::data

#include "tradelab/encoder/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tradelab/error.hpp"

namespace tradelab::encoder {

void EncoderConfig::validate() const {
  if (D < 1) throw ConfigError("encoder.D must be >= 1");
  if (k_s < 1) throw ConfigError("encoder.k_s must be >= 1");
  if (k_s >= k_l) throw ConfigError("encoder.k_s must be smaller than encoder.k_l");
}

Matrix encode_short(const Matrix& closes, const Matrix& norm_volumes, int k_s, int D) {
  if (closes.rows() < k_s + 1 || norm_volumes.rows() < k_s)
    throw ValidationError("short-horizon encoder needs " + std::to_string(k_s) + " days of history");
  if (closes.cols() != norm_volumes.cols())
    throw ValidationError("short-horizon encoder: close and volume windows disagree on symbols");
  const auto S = closes.cols();
  Matrix h = Matrix::Zero(S, D);
  const auto c0 = closes.rows() - k_s - 1;
  const auto v0 = norm_volumes.rows() - k_s;
  for (Eigen::Index i = 0; i < S; ++i) {
    for (int k = 0; k < k_s && k < D; ++k)
      h(i, k) = closes(c0 + k + 1, i) / closes(c0 + k, i) - 1.0;
    for (int k = 0; k < k_s && k_s + k < D; ++k) h(i, k_s + k) = norm_volumes(v0 + k, i);
  }
  return h;
}

Matrix encode_long(const Matrix& indicators, const data::IndicatorStats& stats, int D) {
  const auto S = indicators.rows();
  if (stats.mean.rows() != S || stats.mean.cols() != indicators.cols())
    throw ValidationError("long-horizon encoder: statistics do not match the indicator row");
  Matrix h = Matrix::Zero(S, D);
  for (Eigen::Index i = 0; i < S; ++i) {
    for (Eigen::Index k = 0; k < indicators.cols(); ++k) {
      const double x = indicators(i, k);
      if (std::isnan(x)) throw ValidationError("long-horizon encoder: indicator row has NaN (warm-up)");
      if (k >= D) continue;
      const double sd = stats.stddev(i, k);
      h(i, k) = sd > 0.0 ? (x - stats.mean(i, k)) / sd : 0.0;
    }
  }
  return h;
}

Matrix encode_relat(const Matrix& cov, int D) {
  const auto S = cov.rows();
  if (cov.cols() != S) throw ValidationError("relation encoder needs a square covariance matrix");
  if (cov.hasNaN()) throw ValidationError("relation encoder: covariance has NaN (warm-up)");
  Matrix corr = Matrix::Zero(S, S);
  for (Eigen::Index i = 0; i < S; ++i) {
    for (Eigen::Index k = 0; k < S; ++k) {
      const double vi = cov(i, i);
      const double vk = cov(k, k);
      if (vi > 0.0 && vk > 0.0) corr(i, k) = std::clamp(cov(i, k) / std::sqrt(vi * vk), -1.0, 1.0);
    }
  }
  Matrix h = Matrix::Zero(S, D);
  if (S <= D) {
    h.leftCols(S) = corr;
    return h;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(S));
  for (Eigen::Index i = 0; i < S; ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(corr(i, a)) > std::abs(corr(i, b));
    });
    std::sort(order.begin(), order.begin() + D);
    for (int k = 0; k < D; ++k) h(i, k) = corr(i, order[static_cast<std::size_t>(k)]);
  }
  return h;
}

FeatureMapEncoder::FeatureMapEncoder(EncoderConfig cfg, Eigen::VectorXd min_volume,
                                     Eigen::VectorXd max_volume, data::IndicatorStats stats)
    : cfg_(cfg), min_volume_(std::move(min_volume)), max_volume_(std::move(max_volume)),
      stats_(std::move(stats)) {
  cfg_.validate();
}

FeatureMapEncoder::FeatureMapEncoder(EncoderConfig cfg, const data::NormalizationConstants& norm,
                                     data::IndicatorStats stats)
    : FeatureMapEncoder(cfg, norm.min_volume, norm.max_volume, std::move(stats)) {}

MarketState FeatureMapEncoder::encode(const data::PanelData& panel,
                                      const data::IndicatorPanel& indicators,
                                      const data::CovSeries& cov, int row) const {
  const int k = cfg_.k_s;
  if (row < k || row >= panel.num_days())
    throw ValidationError("encoder: row " + std::to_string(row) + " lacks " + std::to_string(k) +
                          " days of history");
  const auto S = panel.num_symbols();
  const Matrix closes = panel.close.middleRows(row - k, k + 1);
  Matrix vols = panel.volume.middleRows(row - k + 1, k);
  for (Eigen::Index i = 0; i < S; ++i)
    vols.col(i) = (vols.col(i).array() - min_volume_[i]) / (max_volume_[i] - min_volume_[i]);

  Matrix ind_row(S, data::kNumIndicators);
  for (int j = 0; j < data::kNumIndicators; ++j)
    ind_row.col(j) = indicators.values[static_cast<std::size_t>(j)].row(row).transpose();

  MarketState h;
  h.h_relat = encode_relat(cov.matrices[static_cast<std::size_t>(row)], cfg_.D);
  h.h_long = encode_long(ind_row, stats_, cfg_.D);
  h.h_short = encode_short(closes, vols, k, cfg_.D);
  return h;
}

Eigen::VectorXd state_vector(const MarketState& h, const Eigen::VectorXd& holdings, double h_max) {
  const auto S = h.symbols();
  const auto D = h.D();
  Eigen::VectorXd s(state_dim(S, D));
  Eigen::Index p = 0;
  for (const Matrix* m : {&h.h_relat, &h.h_long, &h.h_short})
    for (Eigen::Index i = 0; i < S; ++i)
      for (Eigen::Index k = 0; k < D; ++k) s[p++] = (*m)(i, k);
  s.segment(p, S) = holdings / h_max;
  return s;
}

}  // namespace tradelab::encoder

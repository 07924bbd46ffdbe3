#pragma once

#include <memory>

#include <Eigen/Dense>

#include "tradelab/data/covariance.hpp"
#include "tradelab/data/indicators.hpp"
#include "tradelab/data/panel.hpp"
#include "tradelab/data/preprocess.hpp"

namespace tradelab::encoder {

using data::Matrix;

struct EncoderConfig {
  int D = 16;
  int k_s = 5;
  int k_l = 30;  // carried for interface parity; the fixed feature maps do not read it

  void validate() const;  // throws ConfigError
};

// Three [symbols x D] feature branches.
struct MarketState {
  Matrix h_relat;
  Matrix h_long;
  Matrix h_short;

  int D() const { return static_cast<int>(h_short.cols()); }
  int symbols() const { return static_cast<int>(h_short.rows()); }
};

// closes: at least k_s + 1 trailing rows; norm_volumes: at least k_s rows.
// Per stock: last k_s close-to-close returns, then last k_s volumes,
// truncated or zero-padded to D.
Matrix encode_short(const Matrix& closes, const Matrix& norm_volumes, int k_s, int D);

// indicators: [symbols x 8] row; z-scored with the given mean/std
// ([symbols x 8]); zero std maps to 0.
Matrix encode_long(const Matrix& indicators, const data::IndicatorStats& stats, int D);

// Correlation rows; when symbols > D, each row keeps its D largest |corr|
// entries in symbol order.
Matrix encode_relat(const Matrix& cov, int D);

// Market observation -> MarketState at one panel row.
class MarketEncoder {
 public:
  virtual ~MarketEncoder() = default;
  virtual MarketState encode(const data::PanelData& panel, const data::IndicatorPanel& indicators,
                             const data::CovSeries& cov, int row) const = 0;
  virtual int width() const = 0;
  // Rows of history needed before `row` for encode() to succeed.
  virtual int warmup_rows() const = 0;
};

class FeatureMapEncoder final : public MarketEncoder {
 public:
  FeatureMapEncoder(EncoderConfig cfg, Eigen::VectorXd min_volume, Eigen::VectorXd max_volume,
                    data::IndicatorStats stats);
  FeatureMapEncoder(EncoderConfig cfg, const data::NormalizationConstants& norm,
                    data::IndicatorStats stats);

  MarketState encode(const data::PanelData& panel, const data::IndicatorPanel& indicators,
                     const data::CovSeries& cov, int row) const override;
  int width() const override { return cfg_.D; }
  int warmup_rows() const override { return cfg_.k_s; }
  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Eigen::VectorXd min_volume_;
  Eigen::VectorXd max_volume_;
  data::IndicatorStats stats_;
};

// [h_relat, h_long, h_short] row-major, then holdings / h_max.
Eigen::VectorXd state_vector(const MarketState& h, const Eigen::VectorXd& holdings, double h_max);
inline int state_dim(int symbols, int D) { return 3 * symbols * D + symbols; }

}  // namespace tradelab::encoder

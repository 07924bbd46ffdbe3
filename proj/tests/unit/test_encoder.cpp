#include <gtest/gtest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "tradelab/encoder/encoder.hpp"
#include "tradelab/error.hpp"

using namespace tradelab;
using namespace tradelab::encoder;

TEST(EncodeShort, ConstantPricesAndPadding) {
  Matrix closes = Matrix::Constant(6, 2, 10.0);
  Matrix vols(5, 2);
  vols << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0;
  const auto h = encode_short(closes, vols, 5, 16);
  ASSERT_EQ(h.rows(), 2);
  ASSERT_EQ(h.cols(), 16);
  EXPECT_TRUE((h.leftCols(5).array() == 0.0).all());
  EXPECT_DOUBLE_EQ(h(0, 5), 0.1);
  EXPECT_DOUBLE_EQ(h(1, 9), 1.0);
  EXPECT_TRUE((h.rightCols(6).array() == 0.0).all());
  EXPECT_TRUE(data::bit_equal(h, encode_short(closes, vols, 5, 16)));
  const auto narrow = encode_short(closes, vols, 5, 3);
  EXPECT_EQ(narrow.cols(), 3);
  EXPECT_THROW(encode_short(closes.topRows(5), vols, 5, 16), ValidationError);
}

TEST(EncodeShort, Returns) {
  Matrix closes(3, 1);
  closes << 100, 110, 99;
  const auto h = encode_short(closes, Matrix::Zero(2, 1), 2, 4);
  EXPECT_NEAR(h(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(h(0, 1), -0.1, 1e-15);
}

TEST(EncodeLong, ZScore) {
  data::IndicatorStats stats;
  stats.mean = Matrix::Constant(2, 8, 5.0);
  stats.stddev = Matrix::Constant(2, 8, 2.0);
  stats.stddev(1, 3) = 0.0;
  Matrix row = Matrix::Constant(2, 8, 5.0);
  row(0, 2) = 7.0;
  row(1, 3) = 100.0;
  const auto h = encode_long(row, stats, 12);
  EXPECT_EQ(h(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(h(0, 2), 1.0);
  EXPECT_EQ(h(1, 3), 0.0);
  EXPECT_TRUE((h.rightCols(4).array() == 0.0).all());
  row(1, 1) = std::nan("");
  EXPECT_THROW(encode_long(row, stats, 12), ValidationError);
}

TEST(EncodeRelat, Examples) {
  Matrix diag = Matrix::Zero(3, 3);
  diag.diagonal() << 1.0, 4.0, 9.0;
  const auto h = encode_relat(diag, 4);
  EXPECT_TRUE(data::bit_equal(h.leftCols(3), Matrix::Identity(3, 3)));
  EXPECT_TRUE((h.col(3).array() == 0.0).all());

  Matrix pair(2, 2);
  pair << 1.0, 2.0, 2.0, 4.0;  // y = 2x
  const auto hp = encode_relat(pair, 2);
  EXPECT_NEAR(hp(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(hp(1, 0), 1.0, 1e-15);

  Matrix zero_var = pair;
  zero_var.row(1).setZero();
  zero_var.col(1).setZero();
  const auto hz = encode_relat(zero_var, 2);
  EXPECT_EQ(hz(0, 1), 0.0);
  EXPECT_EQ(hz(1, 1), 0.0);
}

TEST(EncodeRelat, ScaleInvariantAndTopD) {
  const auto p = data::synth_gbm(data::SynthSpec::uniform(6, 80, 0.0, 0.02, 0.3, 30.0, 12));
  const auto cov = data::rolling_covariance(p, 60).matrices[70];
  for (int D : {3, 6, 9}) {
    const auto a = encode_relat(cov, D);
    const auto b = encode_relat(cov * 37.5, D);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-14);
  }
  // Row i keeps the D largest |corr|; its own entry (1) always survives.
  const auto h = encode_relat(cov, 3);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(h.row(i).cwiseAbs().maxCoeff(), 1.0, 1e-12);
}

TEST(FeatureMapEncoder, FiniteAfterWarmupAndDeterministic) {
  const auto d = fixture::synth_dataset(data::SynthSpec::uniform(5, 260, 0.0005, 0.03, 0.4, 20.0, 14), 60, 40);
  const FeatureMapEncoder enc({8, 5, 30}, d.normalized.constants, d.indicator_stats);
  for (int row = 59; row < d.panel.num_days(); ++row) {
    const auto h = enc.encode(d.panel, d.indicators, d.covariance, row);
    ASSERT_EQ(h.symbols(), 5);
    ASSERT_EQ(h.D(), 8);
    ASSERT_TRUE(h.h_relat.allFinite() && h.h_long.allFinite() && h.h_short.allFinite()) << row;
  }
  const auto a = enc.encode(d.panel, d.indicators, d.covariance, 100);
  const auto b = enc.encode(d.panel, d.indicators, d.covariance, 100);
  EXPECT_TRUE(data::bit_equal(a.h_short, b.h_short));
  EXPECT_TRUE(data::bit_equal(a.h_long, b.h_long));
  EXPECT_THROW(enc.encode(d.panel, d.indicators, d.covariance, 30), ValidationError);
  EXPECT_THROW(enc.encode(d.panel, d.indicators, d.covariance, 3), ValidationError);
}

TEST(StateVector, Layout) {
  MarketState h;
  h.h_relat = Matrix::Constant(2, 3, 1.0);
  h.h_long = Matrix::Constant(2, 3, 2.0);
  h.h_short = Matrix::Constant(2, 3, 3.0);
  h.h_short(1, 2) = 4.0;
  Eigen::VectorXd hold(2);
  hold << 500, 1000;
  const auto s = state_vector(h, hold, 1000);
  ASSERT_EQ(s.size(), state_dim(2, 3));
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[6], 2.0);
  EXPECT_EQ(s[12], 3.0);
  EXPECT_EQ(s[17], 4.0);
  EXPECT_EQ(s[18], 0.5);
  EXPECT_EQ(s[19], 1.0);
}

TEST(EncoderConfig, Validation) {
  EXPECT_THROW((EncoderConfig{0, 5, 30}).validate(), ConfigError);
  EXPECT_THROW((EncoderConfig{16, 30, 30}).validate(), ConfigError);
  EXPECT_NO_THROW((EncoderConfig{1, 1, 2}).validate());
}

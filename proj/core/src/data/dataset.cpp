#include "tradelab/data/dataset.hpp"

#include "tradelab/error.hpp"

namespace tradelab::data {
namespace {

using diff::DType;
using diff::Tensor;

Tensor matrix_tensor(std::string name, const Matrix& m) {
  Tensor t{std::move(name), {m.rows(), m.cols()}, DType::f64, {}};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  return t;
}

Tensor vector_tensor(std::string name, const Eigen::VectorXd& v) {
  Tensor t{std::move(name), {v.size()}, DType::f64, {}};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

Tensor stacked_tensor(std::string name, const std::vector<Matrix>& ms, Eigen::Index rows,
                      Eigen::Index cols) {
  Tensor t{std::move(name), {static_cast<std::int64_t>(ms.size()), rows, cols}, DType::f64, {}};
  t.data.reserve(ms.size() * static_cast<std::size_t>(rows * cols));
  for (const auto& m : ms)
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) t.data.push_back(m(r, c));
  return t;
}

Matrix read_matrix(const diff::Container& c, const std::string& name, Eigen::Index rows,
                   Eigen::Index cols) {
  const auto& t = c.at(name);
  if (t.shape != std::vector<std::int64_t>{rows, cols})
    throw ValidationError("dataset tensor '" + name + "' has an unexpected shape");
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index k = 0; k < cols; ++k) m(r, k) = t.data[i++];
  return m;
}

Eigen::VectorXd read_vector(const diff::Container& c, const std::string& name, Eigen::Index n) {
  const auto& t = c.at(name);
  if (t.shape != std::vector<std::int64_t>{n})
    throw ValidationError("dataset tensor '" + name + "' has an unexpected shape");
  return Eigen::Map<const Eigen::VectorXd>(t.data.data(), n);
}

std::vector<Matrix> read_stacked(const diff::Container& c, const std::string& name,
                                 std::int64_t count, Eigen::Index rows, Eigen::Index cols) {
  const auto& t = c.at(name);
  if (t.shape != std::vector<std::int64_t>{count, rows, cols})
    throw ValidationError("dataset tensor '" + name + "' has an unexpected shape");
  std::vector<Matrix> out;
  std::size_t i = 0;
  for (std::int64_t k = 0; k < count; ++k) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index q = 0; q < cols; ++q) m(r, q) = t.data[i++];
    out.push_back(std::move(m));
  }
  return out;
}

void add_fields(diff::Container& c, const std::string& prefix, const PanelData& p) {
  c.tensors.push_back(matrix_tensor(prefix + "open", p.open));
  c.tensors.push_back(matrix_tensor(prefix + "high", p.high));
  c.tensors.push_back(matrix_tensor(prefix + "low", p.low));
  c.tensors.push_back(matrix_tensor(prefix + "close", p.close));
  c.tensors.push_back(matrix_tensor(prefix + "volume", p.volume));
}

void read_fields(const diff::Container& c, const std::string& prefix, PanelData& p) {
  const auto rows = static_cast<Eigen::Index>(p.dates.size());
  const auto cols = static_cast<Eigen::Index>(p.symbols.size());
  p.open = read_matrix(c, prefix + "open", rows, cols);
  p.high = read_matrix(c, prefix + "high", rows, cols);
  p.low = read_matrix(c, prefix + "low", rows, cols);
  p.close = read_matrix(c, prefix + "close", rows, cols);
  p.volume = read_matrix(c, prefix + "volume", rows, cols);
}

}  // namespace

PreparedData prepare(const PanelData& raw, const PrepareConfig& cfg,
                     std::span<const double> index_returns) {
  raw.validate();
  if (cfg.test_days < 0 || cfg.test_days >= raw.num_days())
    throw ValidationError("test_days must lie in [0, " + std::to_string(raw.num_days()) + ")");
  PreparedData d;
  d.raw_symbols = raw.num_symbols();
  d.train = DayRange{0, raw.num_days() - cfg.test_days};
  d.test = DayRange{d.train.end, raw.num_days()};

  const PanelData filtered = filter_universe(raw, cfg.min_coverage, d.train);
  if (!index_returns.empty() && static_cast<int>(index_returns.size()) != raw.num_days())
    throw ValidationError("index return series does not cover every panel date");
  const auto fallback = equal_weight_index_returns(filtered);
  d.panel = interpolate_missing(filtered, index_returns.empty() ? std::span<const double>(fallback)
                                                                : index_returns);
  d.indicators = compute_indicators(d.panel);
  d.covariance = rolling_covariance(d.panel, cfg.cov_window);
  d.normalized = normalize(d.panel, fit_normalization(d.panel, d.train));
  d.indicator_stats = indicator_stats(d.indicators, d.train);
  return d;
}

diff::Container to_container(const PreparedData& d) {
  diff::Container c;
  const auto& p = d.panel;
  c.meta = {{"kind", "dataset"},
            {"dates", p.dates},
            {"symbols", p.symbols},
            {"train", {d.train.begin, d.train.end}},
            {"test", {d.test.begin, d.test.end}},
            {"cov_window", d.covariance.window},
            {"raw_symbols", d.raw_symbols},
            {"universe_size", p.num_symbols()},
            {"normalized_exceeds_unit_range", d.normalized.exceeds_unit_range},
            {"indicators", std::vector<std::string>(kIndicatorNames.begin(), kIndicatorNames.end())}};
  add_fields(c, "", p);
  c.tensors.push_back(matrix_tensor("valid", p.valid.cast<double>().matrix()));
  add_fields(c, "norm/", d.normalized.values);
  c.tensors.push_back(vector_tensor("norm/min_low", d.normalized.constants.min_low));
  c.tensors.push_back(vector_tensor("norm/max_high", d.normalized.constants.max_high));
  c.tensors.push_back(vector_tensor("norm/min_volume", d.normalized.constants.min_volume));
  c.tensors.push_back(vector_tensor("norm/max_volume", d.normalized.constants.max_volume));
  c.tensors.push_back(stacked_tensor("indicators", d.indicators.values, p.num_days(), p.num_symbols()));
  c.tensors.push_back(
      stacked_tensor("covariance", d.covariance.matrices, p.num_symbols(), p.num_symbols()));
  c.tensors.push_back(matrix_tensor("indicator_mean", d.indicator_stats.mean));
  c.tensors.push_back(matrix_tensor("indicator_std", d.indicator_stats.stddev));
  return c;
}

PreparedData from_container(const diff::Container& c) {
  if (c.meta.value("kind", "") != "dataset") throw ValidationError("file is not a prepared dataset");
  PreparedData d;
  try {
    auto& p = d.panel;
    p.dates = c.meta.at("dates").get<std::vector<std::string>>();
    p.symbols = c.meta.at("symbols").get<std::vector<std::string>>();
    const auto train = c.meta.at("train").get<std::vector<int>>();
    const auto test = c.meta.at("test").get<std::vector<int>>();
    d.train = {train.at(0), train.at(1)};
    d.test = {test.at(0), test.at(1)};
    d.raw_symbols = c.meta.at("raw_symbols").get<int>();
    d.covariance.window = c.meta.at("cov_window").get<int>();
    d.normalized.exceeds_unit_range = c.meta.at("normalized_exceeds_unit_range").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset manifest: ") + e.what());
  }
  auto& p = d.panel;
  const auto days = static_cast<Eigen::Index>(p.dates.size());
  const auto syms = static_cast<Eigen::Index>(p.symbols.size());
  read_fields(c, "", p);
  p.valid = read_matrix(c, "valid", days, syms).array() != 0.0;
  d.normalized.values.dates = p.dates;
  d.normalized.values.symbols = p.symbols;
  d.normalized.values.valid = p.valid;
  read_fields(c, "norm/", d.normalized.values);
  d.normalized.constants.min_low = read_vector(c, "norm/min_low", syms);
  d.normalized.constants.max_high = read_vector(c, "norm/max_high", syms);
  d.normalized.constants.min_volume = read_vector(c, "norm/min_volume", syms);
  d.normalized.constants.max_volume = read_vector(c, "norm/max_volume", syms);
  d.indicators.values = read_stacked(c, "indicators", kNumIndicators, days, syms);
  d.covariance.matrices = read_stacked(c, "covariance", days, syms, syms);
  d.indicator_stats.mean = read_matrix(c, "indicator_mean", syms, kNumIndicators);
  d.indicator_stats.stddev = read_matrix(c, "indicator_std", syms, kNumIndicators);
  return d;
}

void save_dataset(const std::filesystem::path& path, const PreparedData& d) {
  diff::write_container(path, to_container(d));
}

PreparedData load_dataset(const std::filesystem::path& path) {
  return from_container(diff::read_container(path));
}

}  // namespace tradelab::data

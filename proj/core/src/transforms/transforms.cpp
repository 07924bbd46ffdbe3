#include "tradelab/transforms/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tradelab/error.hpp"

namespace tradelab::transforms {
namespace {

using data::Matrix;
using data::PanelData;

void recompute(Subset& s) {
  s.indicators = data::compute_indicators_unchecked(s.panel);
  s.covariance = data::rolling_covariance_unchecked(s.panel, s.covariance.window);
}

void require_original(const Subset& s, const char* op) {
  if (s.n != kOriginal)
    throw ValidationError(std::string(op) + " expects an original subset, got tag " + std::to_string(s.n));
}

template <typename M>
void reverse_rows(M& m, int begin, int count) {
  for (int i = 0; i < count / 2; ++i) m.row(begin + i).swap(m.row(begin + count - 1 - i));
}

}  // namespace

void TransformConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 100.0)) throw ConfigError("transform.alpha must lie in (0, 100]");
  if (T < 2) throw ConfigError("transform.T must be at least 2");
  if (delta < 1 || delta >= T) throw ConfigError("transform.delta must lie in [1, T)");
}

std::vector<Subset> partition(const PanelData& panel, int T, const PartitionOptions& opt) {
  if (T < 1) throw ValidationError("subset length must be positive");
  if (opt.context_days < 0 || opt.context_days > opt.start_day)
    throw ValidationError("subset context must fit before the first subset");
  const int usable = panel.num_days() - opt.start_day;
  if (usable < T)
    throw ValidationError("panel has " + std::to_string(usable) + " usable days, fewer than T = " +
                          std::to_string(T));
  const int count = usable / T;
  std::vector<Subset> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    const int first = opt.start_day + m * T;
    Subset s;
    s.m = m;
    s.n = kOriginal;
    s.context = opt.context_days;
    s.panel = panel.slice_days(first - opt.context_days, first + T);
    s.covariance.window = opt.cov_window;
    s.index_map.resize(static_cast<std::size_t>(T));
    std::iota(s.index_map.begin(), s.index_map.end(), first);
    recompute(s);
    out.push_back(std::move(s));
  }
  return out;
}

Subset f1_invert_top_gainers(const Subset& src, double alpha) {
  require_original(src, "F1");
  Subset s = src;
  s.n = kInvertGainers;
  const int L = src.length();
  const int syms = src.panel.num_symbols();
  const int quota = static_cast<int>(std::ceil(alpha / 100.0 * syms - 1e-12));
  const Matrix& c = src.panel.close;
  PanelData& p = s.panel;

  std::vector<int> order(static_cast<std::size_t>(syms));
  std::vector<double> growth(static_cast<std::size_t>(syms));
  std::vector<char> invert(static_cast<std::size_t>(syms));
  std::vector<char> touched(static_cast<std::size_t>(syms), 0);
  for (int t = 1; t < L; ++t) {
    const int r = src.row(t);
    for (int i = 0; i < syms; ++i) growth[static_cast<std::size_t>(i)] = c(r, i) / c(r - 1, i) - 1.0;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return growth[static_cast<std::size_t>(a)] > growth[static_cast<std::size_t>(b)];
    });
    std::fill(invert.begin(), invert.end(), 0);
    for (int k = 0; k < quota; ++k) {
      const int i = order[static_cast<std::size_t>(k)];
      const double g = growth[static_cast<std::size_t>(i)];
      // g >= 1 would send the inverted close to zero or below.
      if (g > 0.0 && g < 1.0) invert[static_cast<std::size_t>(i)] = 1;
    }
    for (int i = 0; i < syms; ++i) {
      const auto k = static_cast<std::size_t>(i);
      // Stocks not yet inverted keep their original cells bit for bit.
      if (!touched[k] && !invert[k]) continue;
      touched[k] = 1;
      const double g = growth[k];
      const double rebuilt = p.close(r - 1, i) * (invert[k] ? 1.0 - g : 1.0 + g);
      const double ratio = rebuilt / c(r, i);
      p.open(r, i) = src.panel.open(r, i) * ratio;
      p.high(r, i) = src.panel.high(r, i) * ratio;
      p.low(r, i) = src.panel.low(r, i) * ratio;
      p.close(r, i) = rebuilt;
    }
  }
  recompute(s);
  return s;
}

Subset f2_reverse(const Subset& src) {
  if (src.n != kOriginal && src.n != kReverse)
    throw ValidationError("F2 expects an original subset, got tag " + std::to_string(src.n));
  Subset s = src;
  s.n = src.n == kOriginal ? kReverse : kOriginal;
  const int L = src.length();
  const int b = src.context;
  PanelData& p = s.panel;
  std::reverse(p.dates.begin() + b, p.dates.end());
  reverse_rows(p.open, b, L);
  reverse_rows(p.high, b, L);
  reverse_rows(p.low, b, L);
  reverse_rows(p.close, b, L);
  reverse_rows(p.volume, b, L);
  reverse_rows(p.valid, b, L);
  std::reverse(s.index_map.begin(), s.index_map.end());
  recompute(s);
  return s;
}

Subset f3_downsample(const Subset& src, int delta) {
  require_original(src, "F3");
  const int L = src.length();
  if (delta < 1 || delta >= L) throw ValidationError("F3 stride must lie in [1, T)");
  std::vector<int> rows;
  for (int r = 0; r < src.context; ++r) rows.push_back(r);
  std::vector<int> kept;
  for (int t = 0; t < L; t += delta) {
    rows.push_back(src.row(t));
    kept.push_back(src.index_map[static_cast<std::size_t>(t)]);
  }
  Subset s;
  s.m = src.m;
  s.n = kDownsample;
  s.context = src.context;
  const auto& q = src.panel;
  s.panel.symbols = q.symbols;
  const auto n = static_cast<Eigen::Index>(rows.size());
  s.panel.open.resize(n, q.num_symbols());
  s.panel.high.resize(n, q.num_symbols());
  s.panel.low.resize(n, q.num_symbols());
  s.panel.close.resize(n, q.num_symbols());
  s.panel.volume.resize(n, q.num_symbols());
  s.panel.valid.resize(n, q.num_symbols());
  for (Eigen::Index k = 0; k < n; ++k) {
    const int r = rows[static_cast<std::size_t>(k)];
    s.panel.dates.push_back(q.dates[static_cast<std::size_t>(r)]);
    s.panel.open.row(k) = q.open.row(r);
    s.panel.high.row(k) = q.high.row(r);
    s.panel.low.row(k) = q.low.row(r);
    s.panel.close.row(k) = q.close.row(r);
    s.panel.volume.row(k) = q.volume.row(r);
    s.panel.valid.row(k) = q.valid.row(r);
  }
  s.index_map = std::move(kept);
  s.covariance.window = src.covariance.window;
  recompute(s);
  return s;
}

std::vector<Subset> expand(const std::vector<Subset>& subsets, const TransformConfig& cfg) {
  cfg.validate();
  std::vector<Subset> out;
  out.reserve(subsets.size() * (kNumTransforms + 1));
  for (const auto& s : subsets) {
    require_original(s, "expand");
    out.push_back(s);
    out.push_back(f1_invert_top_gainers(s, cfg.alpha));
    out.push_back(f2_reverse(s));
    out.push_back(f3_downsample(s, cfg.delta));
  }
  return out;
}

std::optional<int> align_index(int t, int n, const TransformConfig& cfg) {
  if (t < 0 || t >= cfg.T) return std::nullopt;
  switch (n) {
    case kOriginal:
    case kInvertGainers:
      return t;
    case kReverse:
      return cfg.T - 1 - t;
    case kDownsample:
      if (t % cfg.delta == 0) return t / cfg.delta;
      return std::nullopt;
    default:
      throw ValidationError("unknown transform tag " + std::to_string(n));
  }
}

bool bit_equal(const Subset& a, const Subset& b) {
  if (a.m != b.m || a.n != b.n || a.context != b.context || a.index_map != b.index_map) return false;
  if (!data::bit_equal(a.panel, b.panel)) return false;
  if (a.indicators.values.size() != b.indicators.values.size()) return false;
  for (std::size_t k = 0; k < a.indicators.values.size(); ++k)
    if (!data::bit_equal(a.indicators.values[k], b.indicators.values[k])) return false;
  if (a.covariance.window != b.covariance.window ||
      a.covariance.matrices.size() != b.covariance.matrices.size())
    return false;
  for (std::size_t k = 0; k < a.covariance.matrices.size(); ++k)
    if (!data::bit_equal(a.covariance.matrices[k], b.covariance.matrices[k])) return false;
  return true;
}

}  // namespace tradelab::transforms

#include "tradelab/train/pool.hpp"

#include "tradelab/error.hpp"

namespace tradelab::train {

SubsetPool::SubsetPool(std::vector<transforms::Subset> subsets, const encoder::MarketEncoder& enc) {
  if (subsets.empty()) throw ValidationError("training needs at least one subset");
  symbols_ = subsets.front().panel.num_symbols();
  market_dim_ = 3 * symbols_ * enc.width();
  const Eigen::VectorXd no_holdings = Eigen::VectorXd::Zero(symbols_);
  for (auto& s : subsets) {
    if (s.panel.num_symbols() != symbols_) throw ValidationError("subsets disagree on the universe");
    if (s.n < 0 || s.n > transforms::kNumTransforms) throw ValidationError("subset has an unknown tag");
    if (s.context < enc.warmup_rows())
      throw ValidationError("subset context is shorter than the encoder warm-up");
    Entry e;
    const int L = s.length();
    e.market.resize(L, market_dim_);
    e.closes.resize(L, symbols_);
    for (int t = 0; t < L; ++t) {
      const auto h = enc.encode(s.panel, s.indicators, s.covariance, s.row(t));
      e.market.row(t) = encoder::state_vector(h, no_holdings, 1.0).head(market_dim_).transpose();
      e.closes.row(t) = s.panel.close.row(s.row(t));
    }
    if (!e.market.allFinite()) throw ValidationError("encoded market states contain NaN or Inf");
    const auto key = std::make_pair(s.m, s.n);
    if (!lookup_.emplace(key, entries_.size()).second)
      throw ValidationError("duplicate subset (m=" + std::to_string(s.m) + ", n=" + std::to_string(s.n) + ")");
    e.subset = std::move(s);
    entries_.push_back(std::move(e));
  }
}

std::optional<std::size_t> SubsetPool::find(int m, int n) const {
  auto it = lookup_.find({m, n});
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void SubsetPool::touch(std::size_t i) const {
  ++counts_[static_cast<std::size_t>(entries_.at(i).subset.n)];
}

const transforms::Subset& SubsetPool::subset(std::size_t i) const {
  touch(i);
  return entries_[i].subset;
}

const Mat& SubsetPool::market(std::size_t i) const {
  touch(i);
  return entries_[i].market;
}

const Mat& SubsetPool::closes(std::size_t i) const {
  touch(i);
  return entries_[i].closes;
}

}  // namespace tradelab::train

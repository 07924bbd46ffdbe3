#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tradelab/encoder/encoder.hpp"
#include "tradelab/transforms/transforms.hpp"

namespace tradelab::train {

using Mat = Eigen::MatrixXd;

// Subsets with their market features encoded once per step (market states
// do not depend on actions). Every data read is counted per transform tag
// so callers can audit which data a stage touched.
class SubsetPool {
 public:
  SubsetPool(std::vector<transforms::Subset> subsets, const encoder::MarketEncoder& enc);

  std::size_t size() const { return entries_.size(); }
  // Tag and index of entry i; metadata only, not counted as a data read.
  int tag(std::size_t i) const { return entries_.at(i).subset.n; }
  int index(std::size_t i) const { return entries_.at(i).subset.m; }
  int length(std::size_t i) const { return entries_.at(i).subset.length(); }
  std::optional<std::size_t> find(int m, int n) const;

  const transforms::Subset& subset(std::size_t i) const;
  const Mat& market(std::size_t i) const;  // [length x 3 S D]
  const Mat& closes(std::size_t i) const;  // [length x S], step closes
  int symbols() const { return symbols_; }
  int market_dim() const { return market_dim_; }

  std::uint64_t accesses(int tag) const { return counts_.at(static_cast<std::size_t>(tag)); }
  std::uint64_t accesses_transformed() const { return counts_[1] + counts_[2] + counts_[3]; }
  void reset_accesses() { counts_.fill(0); }

 private:
  struct Entry {
    transforms::Subset subset;
    Mat market;
    Mat closes;
  };
  void touch(std::size_t i) const;

  std::vector<Entry> entries_;
  std::map<std::pair<int, int>, std::size_t> lookup_;
  int symbols_ = 0;
  int market_dim_ = 0;
  mutable std::array<std::uint64_t, 4> counts_{};
};

}  // namespace tradelab::train

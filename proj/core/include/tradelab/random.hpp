#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tradelab {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seeded generator with platform-independent draws. std::mt19937_64 is
// specified bit-exactly by the standard; the distribution helpers here are
// implemented locally because std::*_distribution output is not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream keyed by (seed, keys...). Streams depend only on the
  // key and not on how many numbers other streams consumed.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal
  std::size_t below(std::size_t n);       // uniform integer in [0, n)

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tradelab

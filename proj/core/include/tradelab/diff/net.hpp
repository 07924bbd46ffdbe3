#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tradelab/diff/autodiff.hpp"

namespace tradelab::diff {

enum class Head { linear, gaussian };

// MLP with tanh hidden layers. A gaussian head emits 2 * output columns:
// mean then log_std (clamped to [kLogStdMin, kLogStdMax]).
struct NetSpec {
  int input = 1;
  std::vector<int> hidden = {256, 256};
  int output = 1;
  Head head = Head::linear;

  void validate() const;  // throws ConfigError
  int final_width() const { return head == Head::gaussian ? 2 * output : output; }
  int layers() const { return static_cast<int>(hidden.size()) + 1; }
  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

nlohmann::json to_json(const NetSpec& s);
NetSpec net_spec_from_json(const nlohmann::json& j);

// Named tensors "l<k>.W" [in x out] and "l<k>.b" [1 x out] per layer.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Mat> tensors;

  std::size_t size() const { return tensors.size(); }
  Eigen::Index numel() const;
  std::uint64_t hash() const;  // FNV-1a over names, shapes and value bits
  bool all_finite() const;
};

bool bit_equal(const ParamSet& a, const ParamSet& b);
double max_abs_diff(const ParamSet& a, const ParamSet& b);

// Xavier-uniform weights, zero biases.
ParamSet init(const NetSpec& spec, std::uint64_t seed);
ParamSet zeros_like(const ParamSet& p);

// Numeric forward pass over rows of x. Gaussian heads return
// [mean | clamped log_std].
Mat forward(const NetSpec& spec, const ParamSet& params, const Mat& x);

// Differentiable forward; `params` is the tensor list in ParamSet order.
Var forward(const NetSpec& spec, const std::vector<Var>& params, const Var& x);

std::vector<Var> as_parameters(const ParamSet& p);  // leaves requiring grad
std::vector<Var> as_constants(const ParamSet& p);
ParamSet values_of(const ParamSet& like, const std::vector<Var>& vars);

// target <- (1 - tau) target + tau source
ParamSet polyak(const ParamSet& target, const ParamSet& source, double tau);

// Rounds every value to the nearest float.
ParamSet quantize_f32(const ParamSet& p);

}  // namespace tradelab::diff

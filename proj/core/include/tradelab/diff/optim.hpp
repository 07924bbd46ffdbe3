#pragma once

#include <cstdint>
#include <vector>

#include "tradelab/diff/net.hpp"

namespace tradelab::diff {

struct OptState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptState for_params(const ParamSet& p);
};

// Bias-corrected adaptive-moment step, in place.
void adam_step(ParamSet& params, const std::vector<Mat>& grads, double lr, OptState& state);

// params - lr * grads
ParamSet sgd_step(const ParamSet& params, const std::vector<Mat>& grads, double lr);

std::vector<Mat> values_of(const std::vector<Var>& vars);

}  // namespace tradelab::diff

#include "tradelab/diff/optim.hpp"

#include <cmath>

#include "tradelab/error.hpp"

namespace tradelab::diff {

OptState OptState::for_params(const ParamSet& p) {
  OptState s;
  for (const auto& t : p.tensors) {
    s.m.push_back(Mat::Zero(t.rows(), t.cols()));
    s.v.push_back(Mat::Zero(t.rows(), t.cols()));
  }
  return s;
}

void adam_step(ParamSet& params, const std::vector<Mat>& grads, double lr, OptState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw InvariantError("adam_step: tensor count mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params.tensors[k];
    const auto& g = grads[k];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw InvariantError("adam_step: gradient shape mismatch in '" + params.names[k] + "'");
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g.cwiseProduct(g);
    if (lr == 0.0) continue;
    p.array() -= lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + state.eps);
  }
}

ParamSet sgd_step(const ParamSet& params, const std::vector<Mat>& grads, double lr) {
  if (grads.size() != params.size()) throw InvariantError("sgd_step: tensor count mismatch");
  ParamSet out = params;
  if (lr == 0.0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out.tensors[k] -= lr * grads[k];
  return out;
}

std::vector<Mat> values_of(const std::vector<Var>& vars) {
  std::vector<Mat> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.value());
  return out;
}

}  // namespace tradelab::diff

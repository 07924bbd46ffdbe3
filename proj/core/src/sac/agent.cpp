#include "tradelab/sac/agent.hpp"

#include <cmath>
#include <numbers>

#include "tradelab/error.hpp"
#include "tradelab/random.hpp"

namespace tradelab::sac {

diff::NetSpec AgentSpec::actor() const {
  return {state_dim, hidden, action_dim, diff::Head::gaussian};
}

diff::NetSpec AgentSpec::critic() const {
  return {state_dim + action_dim, hidden, 1, diff::Head::linear};
}

void AgentParams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("agent gamma must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw ValidationError("agent lambda must be >= 0");
  if (critic1.names != target1.names || critic2.names != target2.names)
    throw ValidationError("target critics do not match the critics");
  for (std::size_t k = 0; k < critic1.size(); ++k)
    if (critic1.tensors[k].rows() != target1.tensors[k].rows() ||
        critic1.tensors[k].cols() != target1.tensors[k].cols() ||
        critic2.tensors[k].rows() != target2.tensors[k].rows() ||
        critic2.tensors[k].cols() != target2.tensors[k].cols())
      throw ValidationError("target critic shapes do not match the critics");
}

AgentParams make_agent(const AgentSpec& spec, std::uint64_t seed, double lambda, double gamma) {
  AgentParams a;
  a.actor_spec = spec.actor();
  a.critic_spec = spec.critic();
  a.actor = diff::init(a.actor_spec, mix64(seed ^ 0xa1));
  a.critic1 = diff::init(a.critic_spec, mix64(seed ^ 0xc1));
  a.critic2 = diff::init(a.critic_spec, mix64(seed ^ 0xc2));
  a.target1 = a.critic1;
  a.target2 = a.critic2;
  a.lambda = lambda;
  a.gamma = gamma;
  a.validate();
  return a;
}

ActorSample actor_sample(const diff::NetSpec& spec, const std::vector<Var>& theta, const Var& states,
                         const Mat& noise, bool deterministic) {
  const auto A = spec.output;
  const Var out = diff::forward(spec, theta, states);
  const Var mean = diff::slice_cols(out, 0, A);
  const Var log_std = diff::slice_cols(out, A, A);
  Var pre;
  Mat eps;
  if (deterministic) {
    pre = mean;
    eps = Mat::Zero(states.rows(), A);
  } else {
    if (noise.rows() != states.rows() || noise.cols() != A)
      throw InvariantError("actor_sample: noise shape does not match [batch x actions]");
    eps = noise;
    pre = diff::add(mean, diff::mul(diff::exp(log_std), diff::constant(noise)));
  }
  const Var action = diff::tanh(pre);
  // log N(pre; mean, std) = -eps^2/2 - log_std - log(2 pi)/2, minus the
  // tanh Jacobian log(1 - a^2).
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Var gauss = diff::sub(diff::constant((-0.5 * eps.array().square() - half_log_2pi).matrix()), log_std);
  const Var jac = diff::log(diff::add_scalar(diff::neg(diff::square(action)), 1.0 + 1e-6));
  return {action, diff::row_sum(diff::sub(gauss, jac))};
}

Mat actor_deterministic(const AgentParams& agent, const Mat& states) {
  const Mat out = diff::forward(agent.actor_spec, agent.actor, states);
  return out.leftCols(agent.action_dim()).array().tanh().matrix();
}

Mat actor_stochastic(const AgentParams& agent, const Mat& states, const Mat& noise) {
  const auto A = agent.action_dim();
  const Mat out = diff::forward(agent.actor_spec, agent.actor, states);
  const Mat pre = out.leftCols(A) + (out.rightCols(A).array().exp() * noise.array()).matrix();
  return pre.array().tanh().matrix();
}

Var critic_eval(const diff::NetSpec& spec, const std::vector<Var>& phi, const Var& states,
                const Var& actions) {
  if (states.cols() + actions.cols() != spec.input)
    throw ValidationError("critic input width does not match (state, action)");
  return diff::forward(spec, phi, diff::concat_cols(states, actions));
}

Mat critic_values(const diff::NetSpec& spec, const ParamSet& phi, const Mat& states, const Mat& actions) {
  if (states.cols() + actions.cols() != spec.input)
    throw ValidationError("critic input width does not match (state, action)");
  Mat x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  return diff::forward(spec, phi, x);
}

}  // namespace tradelab::sac

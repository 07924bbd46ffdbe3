#pragma once

#include <cstdint>
#include <vector>

#include "tradelab/diff/net.hpp"

namespace tradelab::sac {

using diff::Mat;
using diff::ParamSet;
using diff::Var;

struct AgentSpec {
  int state_dim = 1;
  int action_dim = 1;
  std::vector<int> hidden = {256, 256};

  diff::NetSpec actor() const;   // gaussian head over action_dim
  diff::NetSpec critic() const;  // linear scalar head over (s, a)
};

struct AgentParams {
  diff::NetSpec actor_spec;
  diff::NetSpec critic_spec;
  ParamSet actor;
  ParamSet critic1;
  ParamSet critic2;
  ParamSet target1;
  ParamSet target2;
  double lambda = 0.2;  // entropy coefficient
  double gamma = 0.99;

  void validate() const;  // throws ValidationError
  int action_dim() const { return actor_spec.output; }
};

// Actor and critics from independent seeded streams; targets copy critics.
AgentParams make_agent(const AgentSpec& spec, std::uint64_t seed, double lambda = 0.2,
                       double gamma = 0.99);

struct ActorSample {
  Var action;    // [B x A], tanh-squashed
  Var log_prob;  // [B x 1], with the tanh change-of-variables term
};

// Reparameterized sample a = tanh(mean + exp(log_std) * noise). When
// `deterministic` the noise is ignored and a = tanh(mean); log_prob is then
// the density at that point.
ActorSample actor_sample(const diff::NetSpec& spec, const std::vector<Var>& theta, const Var& states,
                         const Mat& noise, bool deterministic = false);

// Numeric convenience: tanh(mean) per row.
Mat actor_deterministic(const AgentParams& agent, const Mat& states);
// Numeric stochastic action for a single state row.
Mat actor_stochastic(const AgentParams& agent, const Mat& states, const Mat& noise);

Var critic_eval(const diff::NetSpec& spec, const std::vector<Var>& phi, const Var& states,
                const Var& actions);
Mat critic_values(const diff::NetSpec& spec, const ParamSet& phi, const Mat& states, const Mat& actions);

}  // namespace tradelab::sac

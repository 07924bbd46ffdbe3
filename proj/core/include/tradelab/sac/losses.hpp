#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tradelab/sac/agent.hpp"

namespace tradelab::sac {

using Vector = Eigen::VectorXd;

// One ensemble slot: the next state under transform n plus the prices used
// to value the post-trade balance. present(i) = false masks the slot out.
struct NextVariant {
  Mat states;                // [B x state_dim]
  Mat prices;                // [B x S]
  Eigen::Array<bool, Eigen::Dynamic, 1> present;  // [B]
};

// Flattened transitions. next[0] is the sample's own next state and is
// always present; next[1..] are transformed counterparts.
struct SacBatch {
  Mat states;          // [B x state_dim]
  Mat actions;         // [B x A]
  Mat prices;          // [B x S] closes at t
  Vector cash_before;  // [B]
  Mat holdings_before; // [B x S]
  Vector cash_after;   // [B]
  Mat holdings_after;  // [B x S]
  std::vector<NextVariant> next;

  Eigen::Index size() const { return states.rows(); }
  SacBatch rows(const std::vector<Eigen::Index>& idx) const;
  void validate() const;  // throws InvariantError
};

// Concatenates batches sample-wise. Variant lists are padded with absent
// slots to the longest one.
SacBatch concat(const std::vector<SacBatch>& batches);

// env::reward for every sample against variant v.
Vector variant_rewards(const SacBatch& b, std::size_t v);

// Per-sample candidate r + gamma (-lambda log pi(a'|s') + min_k Qbar_k(s',a'))
// for variant v, with a' drawn from the actor using `noise` [B x A].
Vector td_candidate(const SacBatch& b, const AgentParams& agent, std::size_t v, const Mat& noise);

// Inner target: candidate on the sample's own next state.
Vector td_target_inner(const SacBatch& b, const AgentParams& agent, const Mat& noise);

// Worst case over present variants; noise[v] drives variant v.
Vector td_target_ensemble(const SacBatch& b, const AgentParams& agent, const std::vector<Mat>& noise);

// Row-wise min over entries flagged present; throws ValidationError when a
// row has none.
Vector min_over_present(const Mat& candidates, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& present);

// mean_i (Q(s_i, a_i) - y_i)^2, or sum_i w_i (...)^2 when weights are given.
Var critic_loss(const diff::NetSpec& spec, const std::vector<Var>& phi, const Mat& states,
                const Mat& actions, const Vector& targets, const Vector* weights = nullptr);

// mean_i [lambda log pi(a_i|s_i) - Q_phi1(s_i, a_i)] with a_i reparameterized
// by noise; weighted sum when weights are given.
Var actor_loss(const diff::NetSpec& actor_spec, const diff::NetSpec& critic_spec,
               const std::vector<Var>& theta, const std::vector<Var>& phi1, const Mat& states,
               const Mat& noise, double lambda, const Vector* weights = nullptr);

}  // namespace tradelab::sac

#include "tradelab/sac/losses.hpp"

#include <limits>

#include "tradelab/error.hpp"

namespace tradelab::sac {
namespace {

template <typename M>
M take(const M& m, const std::vector<Eigen::Index>& idx) {
  M out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
  return out;
}

Vector take_vec(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Eigen::Index>(r)] = v[idx[r]];
  return out;
}

Var weighted_mean(const Var& x, const Vector* weights) {
  if (!weights) return diff::mean(x);
  if (weights->size() != x.rows()) throw InvariantError("loss weights do not match the batch");
  return diff::sum(diff::mul(x, diff::constant(*weights)));
}

}  // namespace

SacBatch SacBatch::rows(const std::vector<Eigen::Index>& idx) const {
  SacBatch b;
  b.states = take(states, idx);
  b.actions = take(actions, idx);
  b.prices = take(prices, idx);
  b.cash_before = take_vec(cash_before, idx);
  b.holdings_before = take(holdings_before, idx);
  b.cash_after = take_vec(cash_after, idx);
  b.holdings_after = take(holdings_after, idx);
  for (const auto& v : next) {
    NextVariant w;
    w.states = take(v.states, idx);
    w.prices = take(v.prices, idx);
    w.present.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) w.present[static_cast<Eigen::Index>(r)] = v.present[idx[r]];
    b.next.push_back(std::move(w));
  }
  return b;
}

void SacBatch::validate() const {
  const auto B = states.rows();
  if (actions.rows() != B || prices.rows() != B || cash_before.size() != B ||
      holdings_before.rows() != B || cash_after.size() != B || holdings_after.rows() != B)
    throw InvariantError("batch fields disagree on the sample count");
  if (next.empty()) throw InvariantError("batch has no next-state variant");
  for (const auto& v : next)
    if (v.states.rows() != B || v.prices.rows() != B || v.present.size() != B)
      throw InvariantError("next-state variant disagrees on the sample count");
  if (!next[0].present.all()) throw InvariantError("own next state must be present for every sample");
}

SacBatch concat(const std::vector<SacBatch>& batches) {
  if (batches.empty()) throw InvariantError("concat of zero batches");
  Eigen::Index B = 0;
  std::size_t variants = 0;
  for (const auto& b : batches) {
    B += b.size();
    variants = std::max(variants, b.next.size());
  }
  const auto& f = batches.front();
  SacBatch out;
  out.states.resize(B, f.states.cols());
  out.actions.resize(B, f.actions.cols());
  out.prices.resize(B, f.prices.cols());
  out.cash_before.resize(B);
  out.holdings_before.resize(B, f.holdings_before.cols());
  out.cash_after.resize(B);
  out.holdings_after.resize(B, f.holdings_after.cols());
  out.next.resize(variants);
  for (auto& v : out.next) {
    v.states = Mat::Zero(B, f.states.cols());
    v.prices = Mat::Ones(B, f.prices.cols());
    v.present = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(B, false);
  }
  Eigen::Index r = 0;
  for (const auto& b : batches) {
    const auto n = b.size();
    out.states.middleRows(r, n) = b.states;
    out.actions.middleRows(r, n) = b.actions;
    out.prices.middleRows(r, n) = b.prices;
    out.cash_before.segment(r, n) = b.cash_before;
    out.holdings_before.middleRows(r, n) = b.holdings_before;
    out.cash_after.segment(r, n) = b.cash_after;
    out.holdings_after.middleRows(r, n) = b.holdings_after;
    for (std::size_t v = 0; v < b.next.size(); ++v) {
      out.next[v].states.middleRows(r, n) = b.next[v].states;
      out.next[v].prices.middleRows(r, n) = b.next[v].prices;
      out.next[v].present.segment(r, n) = b.next[v].present;
    }
    r += n;
  }
  return out;
}

Vector variant_rewards(const SacBatch& b, std::size_t v) {
  const auto& nv = b.next.at(v);
  const Vector base = b.cash_before + b.holdings_before.cwiseProduct(b.prices).rowwise().sum();
  const Vector after = b.cash_after + b.holdings_after.cwiseProduct(nv.prices).rowwise().sum();
  if (!(base.array() > 0.0).all()) throw ValidationError("reward: portfolio value at t is not positive");
  return (after.array() / base.array() - 1.0).matrix();
}

Vector td_candidate(const SacBatch& b, const AgentParams& agent, std::size_t v, const Mat& noise) {
  diff::NoGradGuard no_grad;
  const auto& nv = b.next.at(v);
  const auto theta = diff::as_constants(agent.actor);
  const Var s1 = diff::constant(nv.states);
  const auto sample = actor_sample(agent.actor_spec, theta, s1, noise);
  const Mat q1 = critic_values(agent.critic_spec, agent.target1, nv.states, sample.action.value());
  const Mat q2 = critic_values(agent.critic_spec, agent.target2, nv.states, sample.action.value());
  const Vector soft = q1.col(0).cwiseMin(q2.col(0)) - agent.lambda * sample.log_prob.value().col(0);
  return variant_rewards(b, v) + agent.gamma * soft;
}

Vector td_target_inner(const SacBatch& b, const AgentParams& agent, const Mat& noise) {
  return td_candidate(b, agent, 0, noise);
}

Vector min_over_present(const Mat& candidates,
                        const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& present) {
  Vector out(candidates.rows());
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index v = 0; v < candidates.cols(); ++v)
      if (present(i, v)) {
        best = any ? std::min(best, candidates(i, v)) : candidates(i, v);
        any = true;
      }
    if (!any) throw ValidationError("ensemble target: sample " + std::to_string(i) + " has no candidate");
    out[i] = best;
  }
  return out;
}

Vector td_target_ensemble(const SacBatch& b, const AgentParams& agent, const std::vector<Mat>& noise) {
  if (noise.size() < b.next.size()) throw InvariantError("ensemble target needs noise per variant");
  const auto B = b.size();
  const auto V = static_cast<Eigen::Index>(b.next.size());
  Mat cand = Mat::Zero(B, V);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> present(B, V);
  for (Eigen::Index v = 0; v < V; ++v) {
    const auto& nv = b.next[static_cast<std::size_t>(v)];
    present.col(v) = nv.present;
    if (!nv.present.any()) continue;
    cand.col(v) = td_candidate(b, agent, static_cast<std::size_t>(v), noise[static_cast<std::size_t>(v)]);
  }
  return min_over_present(cand, present);
}

Var critic_loss(const diff::NetSpec& spec, const std::vector<Var>& phi, const Mat& states,
                const Mat& actions, const Vector& targets, const Vector* weights) {
  if (targets.size() != states.rows()) throw InvariantError("critic_loss: target count mismatch");
  const Var q = critic_eval(spec, phi, diff::constant(states), diff::constant(actions));
  const Var resid = diff::sub(q, diff::constant(targets));
  return weighted_mean(diff::square(resid), weights);
}

Var actor_loss(const diff::NetSpec& actor_spec, const diff::NetSpec& critic_spec,
               const std::vector<Var>& theta, const std::vector<Var>& phi1, const Mat& states,
               const Mat& noise, double lambda, const Vector* weights) {
  const Var s = diff::constant(states);
  const auto sample = actor_sample(actor_spec, theta, s, noise);
  const Var q = critic_eval(critic_spec, phi1, s, sample.action);
  const Var per = diff::sub(diff::scale(sample.log_prob, lambda), q);
  return weighted_mean(per, weights);
}

}  // namespace tradelab::sac

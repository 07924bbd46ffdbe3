#include <gtest/gtest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "tradelab/error.hpp"
#include "tradelab/random.hpp"
#include "tradelab/sac/agent.hpp"
#include "tradelab/sac/losses.hpp"

using namespace tradelab;
using namespace tradelab::sac;
using diff::constant;

namespace {

constexpr int kState = 5;
constexpr int kSyms = 2;

AgentParams tiny_agent(std::uint64_t seed, double lambda = 0.2, double gamma = 0.9) {
  return make_agent(AgentSpec{kState, kSyms, {6}}, seed, lambda, gamma);
}

ParamSet const_critic(const ParamSet& like, double value) {
  ParamSet p = diff::zeros_like(like);
  p.tensors.back()(0, 0) = value;
  return p;
}

// Balances with zero holdings and unchanged cash: every reward is 0.
void zero_rewards(SacBatch& b) {
  b.holdings_before.setZero();
  b.holdings_after.setZero();
  b.cash_after = b.cash_before;
}

Mat noise(Rng& rng, const SacBatch& b) { return rng.normal_matrix(b.size(), kSyms); }

std::vector<Mat> noises(Rng& rng, const SacBatch& b) {
  std::vector<Mat> out;
  for (std::size_t v = 0; v < b.next.size(); ++v) out.push_back(noise(rng, b));
  return out;
}

}  // namespace

TEST(ActorSample, RangeAndLimits) {
  auto a = tiny_agent(1);
  Rng rng = Rng::stream(1, {1});
  const Mat s = rng.normal_matrix(50, kState);
  const Mat eps = rng.normal_matrix(50, kSyms);
  const auto smp = actor_sample(a.actor_spec, diff::as_constants(a.actor), constant(s), eps);
  EXPECT_LT(smp.action.value().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_TRUE(smp.log_prob.value().allFinite());
  // Far in the tail tanh rounds to +-1 in double; log_prob stays finite.
  const auto tail = actor_sample(a.actor_spec, diff::as_constants(a.actor), constant(s), eps * 40.0);
  EXPECT_LE(tail.action.value().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_TRUE(tail.log_prob.value().allFinite());
  const auto det = actor_sample(a.actor_spec, diff::as_constants(a.actor), constant(s), eps, true);
  EXPECT_TRUE(det.log_prob.value().allFinite());
  EXPECT_LT((det.action.value() - actor_deterministic(a, s)).cwiseAbs().maxCoeff(), 1e-15);

  // Push log_std to its floor: the sample collapses onto tanh(mean).
  a.actor.tensors.back().rightCols(kSyms).setConstant(-100.0);
  const Mat near = actor_stochastic(a, s, eps);
  EXPECT_LT((near - actor_deterministic(a, s)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Critic, ZeroDeterministicFinite) {
  const auto a = tiny_agent(2);
  Rng rng = Rng::stream(2, {1});
  const Mat s = rng.normal_matrix(10, kState) * 20;
  const Mat act = rng.normal_matrix(10, kSyms);
  const auto z = diff::zeros_like(a.critic1);
  EXPECT_TRUE((critic_values(a.critic_spec, z, s, act).array() == 0.0).all());
  const Mat q = critic_values(a.critic_spec, a.critic1, s, act);
  EXPECT_EQ(q, critic_values(a.critic_spec, a.critic1, s, act));
  EXPECT_TRUE(q.allFinite());
  EXPECT_EQ(q.cols(), 1);
  EXPECT_THROW(critic_values(a.critic_spec, a.critic1, s.leftCols(4), act), ValidationError);
}

TEST(TdTarget, GammaZeroIsReward) {
  auto a = tiny_agent(3, 0.2, 0.5);
  a.gamma = 0.0;
  Rng rng = Rng::stream(3, {1});
  const auto b = fixture::random_batch(rng, 12, kState, kSyms, 1);
  EXPECT_EQ(td_target_inner(b, a, noise(rng, b)), variant_rewards(b, 0));
  const Vector r = variant_rewards(b, 0);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double base = b.cash_before[i] + b.holdings_before.row(i).dot(b.prices.row(i));
    const double after = b.cash_after[i] + b.holdings_after.row(i).dot(b.next[0].prices.row(i));
    EXPECT_NEAR(r[i], after / base - 1, 1e-12);
  }
}

TEST(TdTarget, MinOfTargetCriticsAndSwap) {
  auto a = tiny_agent(4, 0.0, 0.5);
  a.gamma = 1.0;
  a.target1 = const_critic(a.critic1, 3.0);
  a.target2 = const_critic(a.critic1, 5.0);
  Rng rng = Rng::stream(4, {1});
  auto b = fixture::random_batch(rng, 6, kState, kSyms, 1);
  zero_rewards(b);
  const Mat eps = noise(rng, b);
  const Vector y = td_target_inner(b, a, eps);
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(y[i], 3.0);
  std::swap(a.target1, a.target2);
  EXPECT_EQ(td_target_inner(b, a, eps), y);

  // lambda = 0, identical critics valued v: r + gamma v.
  auto c = tiny_agent(5, 0.0, 0.9);
  c.target1 = c.target2 = const_critic(c.critic1, 2.5);
  auto bc = fixture::random_batch(rng, 6, kState, kSyms, 1);
  const Vector yc = td_target_inner(bc, c, noise(rng, bc));
  const Vector rc = variant_rewards(bc, 0);
  for (Eigen::Index i = 0; i < yc.size(); ++i) EXPECT_NEAR(yc[i], rc[i] + 0.9 * 2.5, 1e-12);
}

TEST(TdTarget, SwapInvariantWithRandomCritics) {
  auto a = tiny_agent(6);
  a.target2 = diff::init(a.critic_spec, 999);
  Rng rng = Rng::stream(6, {1});
  const auto b = fixture::random_batch(rng, 16, kState, kSyms, 4);
  const auto eps = noises(rng, b);
  const Vector y = td_target_ensemble(b, a, eps);
  std::swap(a.target1, a.target2);
  EXPECT_EQ(td_target_ensemble(b, a, eps), y);
}

TEST(TdTarget, EnsembleMinDominanceAndSingleton) {
  Rng rng = Rng::stream(7, {1});
  for (int trial = 0; trial < 25; ++trial) {
    const auto a = tiny_agent(static_cast<std::uint64_t>(10 + trial));
    const auto b = fixture::random_batch(rng, 20, kState, kSyms, 4);
    const auto eps = noises(rng, b);
    const Vector ens = td_target_ensemble(b, a, eps);
    const Vector inner = td_target_inner(b, a, eps[0]);
    for (Eigen::Index i = 0; i < ens.size(); ++i) ASSERT_LE(ens[i], inner[i]);
    // Brute-force min over present candidates.
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
      double best = inner[i];
      for (std::size_t v = 1; v < b.next.size(); ++v)
        if (b.next[v].present[i]) best = std::min(best, td_candidate(b, a, v, eps[v])[i]);
      EXPECT_EQ(ens[i], best);
    }
    auto only = b;
    for (std::size_t v = 1; v < only.next.size(); ++v) only.next[v].present.setConstant(false);
    EXPECT_EQ(td_target_ensemble(only, a, eps), inner);
  }
}

TEST(TdTarget, MinOverPresentExample) {
  Mat c(2, 4);
  c << 0.40, 0.10, 0.25, 0.30, 0.40, 0.10, 0.25, 0.30;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> p(2, 4);
  p << true, true, true, true, true, false, true, true;
  const Vector m = min_over_present(c, p);
  EXPECT_EQ(m[0], 0.10);
  EXPECT_EQ(m[1], 0.25);
  p.row(1).setConstant(false);
  EXPECT_THROW(min_over_present(c, p), ValidationError);
}

TEST(TdTarget, LambdaMonotone) {
  Rng rng = Rng::stream(8, {1});
  const auto b = fixture::random_batch(rng, 30, kState, kSyms, 1);
  const Mat eps = noise(rng, b);
  const auto a0 = tiny_agent(20, 0.0);
  auto a1 = a0;
  a1.lambda = 0.7;
  const Vector y0 = td_target_inner(b, a0, eps);
  const Vector y1 = td_target_inner(b, a1, eps);
  const auto smp = actor_sample(a0.actor_spec, diff::as_constants(a0.actor), constant(b.next[0].states), eps);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double lp = smp.log_prob.value()(i, 0);
    EXPECT_NEAR(y1[i] - y0[i], -a0.gamma * 0.7 * lp, 1e-9);
    if (lp > 0) EXPECT_LE(y1[i], y0[i]);
  }
}

TEST(CriticLoss, ExamplesAndGradient) {
  const auto a = tiny_agent(9);
  Rng rng = Rng::stream(9, {1});
  const auto b = fixture::random_batch(rng, 8, kState, kSyms, 1);
  const Vector q = critic_values(a.critic_spec, a.critic1, b.states, b.actions).col(0);
  const auto phi = diff::as_parameters(a.critic1);
  EXPECT_NEAR(critic_loss(a.critic_spec, phi, b.states, b.actions, q).scalar(), 0.0, 1e-24);
  const Vector shifted = (q.array() - 2.0).matrix();
  EXPECT_NEAR(critic_loss(a.critic_spec, phi, b.states, b.actions, shifted).scalar(), 4.0, 1e-12);
  Vector w = Vector::Constant(8, 0.25);
  EXPECT_NEAR(critic_loss(a.critic_spec, phi, b.states, b.actions, shifted, &w).scalar(), 8.0, 1e-12);

  const Vector y = td_target_inner(b, a, noise(rng, b));
  const auto g = diff::values_of(diff::grad(critic_loss(a.critic_spec, phi, b.states, b.actions, y), phi));
  const auto fd = oracle::finite_diff(
      [&](const std::vector<Mat>& t) {
        std::vector<diff::Var> c;
        for (const auto& m : t) c.push_back(constant(m));
        return critic_loss(a.critic_spec, c, b.states, b.actions, y).scalar();
      },
      a.critic1.tensors);
  EXPECT_LT(oracle::relative_error(g, fd), 1e-4);

  // Target critics move the targets only; the loss gradient at fixed targets is unchanged.
  auto moved = a;
  moved.target1 = diff::init(a.critic_spec, 4242);
  moved.target2 = diff::init(a.critic_spec, 4243);
  Rng r1 = Rng::stream(1, {1}), r2 = Rng::stream(1, {1});
  const Vector ya = td_target_inner(b, a, noise(r1, b));
  const Vector yb = td_target_inner(b, moved, noise(r2, b));
  EXPECT_GT((ya - yb).cwiseAbs().maxCoeff(), 0.0);
  const auto ga = diff::values_of(diff::grad(critic_loss(a.critic_spec, phi, b.states, b.actions, ya), phi));
  const auto ga2 = diff::values_of(diff::grad(critic_loss(a.critic_spec, phi, b.states, b.actions, ya), phi));
  EXPECT_EQ(oracle::relative_error(ga, ga2), 0.0);
}

TEST(ActorLoss, ExamplesAndGradient) {
  auto a = tiny_agent(11, 0.0);
  Rng rng = Rng::stream(11, {1});
  const auto b = fixture::random_batch(rng, 8, kState, kSyms, 1);
  const Mat eps = noise(rng, b);
  const auto theta = diff::as_parameters(a.actor);
  const auto phi = diff::as_constants(a.critic1);
  const double l0 = actor_loss(a.actor_spec, a.critic_spec, theta, phi, b.states, eps, 0.0).scalar();
  const Mat act = actor_stochastic(a, b.states, eps);
  EXPECT_NEAR(l0, -critic_values(a.critic_spec, a.critic1, b.states, act).mean(), 1e-12);

  const auto zphi = diff::as_constants(diff::zeros_like(a.critic1));
  const auto lz = actor_loss(a.actor_spec, a.critic_spec, theta, zphi, b.states, eps, 0.0);
  EXPECT_EQ(lz.scalar(), 0.0);
  for (const auto& g : diff::values_of(diff::grad(lz, theta))) EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);

  const double lambda = 0.2;
  const auto g = diff::values_of(
      diff::grad(actor_loss(a.actor_spec, a.critic_spec, theta, phi, b.states, eps, lambda), theta));
  const auto fd = oracle::finite_diff(
      [&](const std::vector<Mat>& t) {
        std::vector<diff::Var> c;
        for (const auto& m : t) c.push_back(constant(m));
        return actor_loss(a.actor_spec, a.critic_spec, c, phi, b.states, eps, lambda).scalar();
      },
      a.actor.tensors);
  EXPECT_LT(oracle::relative_error(g, fd), 1e-4);
}

TEST(Agent, MakeAndValidate) {
  const auto a = tiny_agent(12);
  EXPECT_TRUE(diff::bit_equal(a.target1, a.critic1));
  EXPECT_TRUE(diff::bit_equal(a.target2, a.critic2));
  EXPECT_FALSE(diff::bit_equal(a.critic1, a.critic2));
  EXPECT_EQ(a.actor_spec.output, kSyms);
  EXPECT_EQ(a.critic_spec.input, kState + kSyms);
  EXPECT_EQ(tiny_agent(12).actor.hash(), a.actor.hash());
  auto bad = a;
  bad.gamma = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = a;
  bad.lambda = -0.1;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(make_agent(AgentSpec{kState, kSyms, {6}}, 1, 0.2, 0.0), ValidationError);
}

TEST(SacBatch, RowsConcatValidate) {
  Rng rng = Rng::stream(13, {1});
  const auto a = fixture::random_batch(rng, 5, kState, kSyms, 3);
  const auto b = fixture::random_batch(rng, 4, kState, kSyms, 1);
  const auto c = concat({a, b});
  ASSERT_EQ(c.size(), 9);
  ASSERT_EQ(c.next.size(), 3u);
  EXPECT_FALSE(c.next[2].present.tail(4).any());
  EXPECT_TRUE(c.next[0].present.all());
  const auto r = c.rows({6, 0});
  EXPECT_EQ(r.states.row(0), b.states.row(1));
  EXPECT_EQ(r.states.row(1), a.states.row(0));
  auto broken = a;
  broken.next[0].present[1] = false;
  EXPECT_THROW(broken.validate(), InvariantError);
}

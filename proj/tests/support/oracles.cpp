#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "tradelab/diff/optim.hpp"
#include "tradelab/random.hpp"
#include "tradelab/sac/losses.hpp"

namespace oracle {

double brute_max_drawdown(const std::vector<double>& v) {
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, (v[i] - v[j]) / v[i]);
  return best;
}

double brute_sharpe(const std::vector<double>& r, double rf, int d) {
  long double sum = 0, ex = 0;
  for (double x : r) {
    sum += x;
    ex += x - rf / d;
  }
  const long double n = static_cast<long double>(r.size());
  const long double mean = sum / n;
  long double ss = 0;
  for (double x : r) ss += (x - mean) * (x - mean);
  const long double sd = std::sqrt(ss / n);
  return static_cast<double>(ex / n / sd * std::sqrt(static_cast<long double>(d)));
}

double brute_cov(const Mat& x, int a, int b, int first, int last) {
  const int n = last - first + 1;
  long double ma = 0, mb = 0;
  for (int t = first; t <= last; ++t) {
    ma += x(t, a);
    mb += x(t, b);
  }
  ma /= n;
  mb /= n;
  long double s = 0;
  for (int t = first; t <= last; ++t) s += (x(t, a) - ma) * (x(t, b) - mb);
  return static_cast<double>(s / (n - 1));
}

double brute_mean(const std::vector<double>& x, int first, int last) {
  long double s = 0;
  for (int t = first; t <= last; ++t) s += x[static_cast<std::size_t>(t)];
  return static_cast<double>(s / (last - first + 1));
}

double brute_std(const std::vector<double>& x, int first, int last) {
  const long double m = brute_mean(x, first, last);
  long double s = 0;
  for (int t = first; t <= last; ++t) s += (x[static_cast<std::size_t>(t)] - m) * (x[static_cast<std::size_t>(t)] - m);
  return static_cast<double>(std::sqrt(s / (last - first)));
}

std::vector<Mat> finite_diff(const std::function<double(const std::vector<Mat>&)>& f, const std::vector<Mat>& at,
                             double eps) {
  std::vector<Mat> g;
  std::vector<Mat> p = at;
  for (std::size_t k = 0; k < p.size(); ++k) {
    Mat gk(p[k].rows(), p[k].cols());
    for (Eigen::Index i = 0; i < p[k].size(); ++i) {
      const double orig = p[k].data()[i];
      p[k].data()[i] = orig + eps;
      const double up = f(p);
      p[k].data()[i] = orig - eps;
      const double down = f(p);
      p[k].data()[i] = orig;
      gk.data()[i] = (up - down) / (2 * eps);
    }
    g.push_back(gk);
  }
  return g;
}

double relative_error(const std::vector<Mat>& a, const std::vector<Mat>& b, double floor) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]).squaredNorm();
    na += a[k].squaredNorm();
    nb += b[k].squaredNorm();
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

tradelab::sac::AgentParams direct_sac(const tradelab::train::SubsetPool& pool, tradelab::sac::AgentParams agent,
                                      const tradelab::train::TrainConfig& cfg,
                                      const tradelab::env::EnvConfig& env_cfg,
                                      const tradelab::transforms::TransformConfig& tcfg) {
  namespace tl = tradelab;
  using tl::train::kStageOod;
  auto rng = [&](int it, std::uint64_t purpose, std::uint64_t v = 0) {
    return tl::Rng::stream(cfg.seed, {kStageOod, static_cast<std::uint64_t>(it), purpose, 0, v});
  };
  tl::diff::OptState oa = tl::diff::OptState::for_params(agent.actor);
  tl::diff::OptState o1 = tl::diff::OptState::for_params(agent.critic1);
  tl::diff::OptState o2 = tl::diff::OptState::for_params(agent.critic2);
  const int A = agent.action_dim();
  for (int it = 0; it < cfg.t1; ++it) {
    const std::size_t i = rng(it, tl::train::kSampleSubsets).sample_without_replacement(pool.size(), 1)[0];
    tl::Rng noise = rng(it, tl::train::kRolloutNoise);
    const auto trs = tl::train::rollout_entry(pool, i, agent, env_cfg, noise);
    const std::size_t B = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), trs.size());
    const auto idx = rng(it, tl::train::kBatchIndices).sample_without_replacement(trs.size(), B);
    const auto batch = tl::train::build_batch(pool, i, trs, idx, env_cfg, tcfg, cfg.ensemble_tags);
    std::vector<Mat> tnoise;
    for (std::size_t v = 0; v < batch.next.size(); ++v)
      tnoise.push_back(rng(it, tl::train::kOuterTargetNoise, v).normal_matrix(static_cast<Eigen::Index>(B), A));
    const Eigen::VectorXd y = tl::sac::td_target_ensemble(batch, agent, tnoise);

    const auto c1 = tl::diff::as_parameters(agent.critic1);
    const auto g1 = tl::diff::grad(tl::sac::critic_loss(agent.critic_spec, c1, batch.states, batch.actions, y), c1);
    const auto c2 = tl::diff::as_parameters(agent.critic2);
    const auto g2 = tl::diff::grad(tl::sac::critic_loss(agent.critic_spec, c2, batch.states, batch.actions, y), c2);
    const auto th = tl::diff::as_parameters(agent.actor);
    const Mat an = rng(it, tl::train::kOuterActorNoise).normal_matrix(static_cast<Eigen::Index>(B), A);
    const auto ga = tl::diff::grad(tl::sac::actor_loss(agent.actor_spec, agent.critic_spec, th,
                                                       tl::diff::as_constants(agent.critic1), batch.states, an,
                                                       agent.lambda),
                                   th);
    tl::diff::adam_step(agent.critic1, tl::diff::values_of(g1), cfg.eta2, o1);
    tl::diff::adam_step(agent.critic2, tl::diff::values_of(g2), cfg.eta2, o2);
    tl::diff::adam_step(agent.actor, tl::diff::values_of(ga), cfg.alpha2, oa);
    agent.target1 = tl::diff::polyak(agent.target1, agent.critic1, cfg.tau);
    agent.target2 = tl::diff::polyak(agent.target2, agent.critic2, cfg.tau);
  }
  return agent;
}

}  // namespace oracle

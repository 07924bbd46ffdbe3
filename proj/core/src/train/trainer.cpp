#include "tradelab/train/trainer.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "tradelab/error.hpp"
#include "tradelab/format.hpp"

namespace tradelab::train {
namespace {

using diff::Mat;
using diff::Var;

Rng stream(const TrainConfig& cfg, Stage stage, int iter, StreamPurpose purpose, std::uint64_t a = 0,
           std::uint64_t b = 0) {
  return Rng::stream(cfg.seed, {stage, static_cast<std::uint64_t>(iter), purpose, a, b});
}

void accumulate(std::vector<Mat>& total, const std::vector<Var>& g) {
  if (total.empty()) {
    for (const auto& v : g) total.push_back(v.value());
    return;
  }
  for (std::size_t k = 0; k < g.size(); ++k) total[k] += g[k].value();
}

std::vector<Var> sgd_vars(const std::vector<Var>& p, const std::vector<Var>& g, double lr) {
  std::vector<Var> out;
  out.reserve(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out.push_back(diff::sub(p[k], diff::scale(g[k], lr)));
  return out;
}

// Outer batch for adapted set j: every batch (cross pairs) or batch j alone,
// weighted so that the loss is the sum of per-batch means.
struct PairInputs {
  Mat states;
  Mat actions;
  Vector targets;
  Mat noise;
  Vector weights;
  double pairs = 0;
};

PairInputs pair_inputs(const std::vector<SubsetBatch>& batches, const std::vector<std::size_t>& which) {
  Eigen::Index B = 0;
  for (auto i : which) B += batches[i].outer_batch.size();
  const auto& f = batches[which.front()];
  PairInputs p;
  p.states.resize(B, f.outer_batch.states.cols());
  p.actions.resize(B, f.outer_batch.actions.cols());
  p.targets.resize(B);
  p.noise.resize(B, f.outer_noise.cols());
  p.weights.resize(B);
  Eigen::Index r = 0;
  for (auto i : which) {
    const auto& sb = batches[i];
    const auto n = sb.outer_batch.size();
    p.states.middleRows(r, n) = sb.outer_batch.states;
    p.actions.middleRows(r, n) = sb.outer_batch.actions;
    p.targets.segment(r, n) = sb.outer_targets;
    p.noise.middleRows(r, n) = sb.outer_noise;
    p.weights.segment(r, n).setConstant(1.0 / static_cast<double>(n));
    r += n;
  }
  p.pairs = static_cast<double>(which.size());
  return p;
}

Mat normal(Rng rng, Eigen::Index rows, Eigen::Index cols) { return rng.normal_matrix(rows, cols); }

}  // namespace

void TrainConfig::validate() const {
  if (t1 < 0 || t2 < 0) throw ConfigError("train.t1 and train.t2 must be >= 0");
  if (K < 1) throw ConfigError("train.K must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  // Zero inner rates are allowed: they collapse the bilevel step to plain SAC.
  if (!(eta1 >= 0.0 && alpha1 >= 0.0)) throw ConfigError("train.eta1 and train.alpha1 must be >= 0");
  if (!(eta2 > 0.0 && alpha2 > 0.0)) throw ConfigError("train.eta2 and train.alpha2 must be > 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("train.tau must lie in (0, 1]");
  if (recent_subsets < 1) throw ConfigError("train.recent_subsets must be >= 1");
  for (int t : ensemble_tags)
    if (t < 1 || t > transforms::kNumTransforms) throw ConfigError("train.ensemble_tags must be in 1..3");
}

AdaptedSet inner_adapt(const SubsetBatch& sb, const AgentParams& agent, InnerRates rates) {
  const auto& b = sb.inner_batch;
  AdaptedSet out;
  out.subset = sb.entry;
  out.batch_id = sb.entry;
  const auto c1 = diff::as_parameters(agent.critic1);
  const auto g1 = diff::grad(
      sac::critic_loss(agent.critic_spec, c1, b.states, b.actions, sb.inner_targets), c1);
  out.critic1 = diff::sgd_step(agent.critic1, diff::values_of(g1), rates.eta1);
  const auto c2 = diff::as_parameters(agent.critic2);
  const auto g2 = diff::grad(
      sac::critic_loss(agent.critic_spec, c2, b.states, b.actions, sb.inner_targets), c2);
  out.critic2 = diff::sgd_step(agent.critic2, diff::values_of(g2), rates.eta1);
  const auto theta = diff::as_parameters(agent.actor);
  const auto ga = diff::grad(sac::actor_loss(agent.actor_spec, agent.critic_spec, theta,
                                             diff::as_constants(out.critic1), b.states,
                                             sb.inner_noise, agent.lambda),
                             theta);
  out.actor = diff::sgd_step(agent.actor, diff::values_of(ga), rates.alpha1);
  return out;
}

OuterGradients outer_gradients(const std::vector<SubsetBatch>& batches,
                               const std::vector<AdaptedSet>& adapted, const AgentParams& agent,
                               InnerRates rates, BilevelMode mode, bool cross_pairs) {
  if (batches.empty() || batches.size() != adapted.size())
    throw InvariantError("outer update needs one adapted set per batch");
  OuterGradients g;
  std::vector<std::size_t> all(batches.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::optional<PairInputs> shared;
  if (cross_pairs) shared = pair_inputs(batches, all);
  double pairs = 0.0;

  for (std::size_t j = 0; j < adapted.size(); ++j) {
    const PairInputs local = cross_pairs ? PairInputs{} : pair_inputs(batches, {j});
    const PairInputs& in = cross_pairs ? *shared : local;
    pairs += in.pairs;
    if (mode == BilevelMode::first_order) {
      const auto c1 = diff::as_parameters(adapted[j].critic1);
      const Var l1 = sac::critic_loss(agent.critic_spec, c1, in.states, in.actions, in.targets, &in.weights);
      accumulate(g.critic1, diff::grad(l1, c1));
      const auto c2 = diff::as_parameters(adapted[j].critic2);
      const Var l2 = sac::critic_loss(agent.critic_spec, c2, in.states, in.actions, in.targets, &in.weights);
      accumulate(g.critic2, diff::grad(l2, c2));
      const auto theta = diff::as_parameters(adapted[j].actor);
      const Var la = sac::actor_loss(agent.actor_spec, agent.critic_spec, theta,
                                     diff::as_constants(adapted[j].critic1), in.states, in.noise,
                                     agent.lambda, &in.weights);
      accumulate(g.actor, diff::grad(la, theta));
      g.critic_loss += l1.scalar();
      g.actor_loss += la.scalar();
    } else {
      // Rebuild the inner step of set j as a differentiable function of the
      // base parameters.
      const auto& sb = batches[j];
      const auto& ib = sb.inner_batch;
      const auto theta = diff::as_parameters(agent.actor);
      const auto c1 = diff::as_parameters(agent.critic1);
      const auto c2 = diff::as_parameters(agent.critic2);
      const auto gi1 = diff::grad(
          sac::critic_loss(agent.critic_spec, c1, ib.states, ib.actions, sb.inner_targets), c1, true);
      const auto gi2 = diff::grad(
          sac::critic_loss(agent.critic_spec, c2, ib.states, ib.actions, sb.inner_targets), c2, true);
      const auto c1a = sgd_vars(c1, gi1, rates.eta1);
      const auto c2a = sgd_vars(c2, gi2, rates.eta1);
      const auto gia = diff::grad(sac::actor_loss(agent.actor_spec, agent.critic_spec, theta, c1a,
                                                  ib.states, sb.inner_noise, agent.lambda),
                                  theta, true);
      const auto thetaa = sgd_vars(theta, gia, rates.alpha1);

      const Var l1 = sac::critic_loss(agent.critic_spec, c1a, in.states, in.actions, in.targets, &in.weights);
      accumulate(g.critic1, diff::grad(l1, c1));
      const Var l2 = sac::critic_loss(agent.critic_spec, c2a, in.states, in.actions, in.targets, &in.weights);
      accumulate(g.critic2, diff::grad(l2, c2));
      const Var la = sac::actor_loss(agent.actor_spec, agent.critic_spec, thetaa, c1a, in.states, in.noise,
                                     agent.lambda, &in.weights);
      accumulate(g.actor, diff::grad(la, theta));
      g.critic_loss += l1.scalar();
      g.actor_loss += la.scalar();
    }
  }
  g.critic_loss /= pairs;
  g.actor_loss /= pairs;
  return g;
}

Optimizers Optimizers::for_agent(const AgentParams& a) {
  return {diff::OptState::for_params(a.actor), diff::OptState::for_params(a.critic1),
          diff::OptState::for_params(a.critic2)};
}

void apply_outer(AgentParams& agent, const OuterGradients& g, double eta2, double alpha2, double tau,
                 Optimizers& opt) {
  diff::adam_step(agent.critic1, g.critic1, eta2, opt.critic1);
  diff::adam_step(agent.critic2, g.critic2, eta2, opt.critic2);
  diff::adam_step(agent.actor, g.actor, alpha2, opt.actor);
  agent.target1 = diff::polyak(agent.target1, agent.critic1, tau);
  agent.target2 = diff::polyak(agent.target2, agent.critic2, tau);
}

std::vector<env::Transition> rollout_entry(const SubsetPool& pool, std::size_t i, const AgentParams& agent,
                                           const env::EnvConfig& env_cfg, Rng& noise) {
  const Mat& market = pool.market(i);
  const auto md = market.cols();
  const auto S = pool.symbols();
  const auto A = agent.action_dim();
  Mat state(1, md + S);
  auto policy = [&](const transforms::Subset&, int t, const env::BalanceState& z) {
    state.leftCols(md) = market.row(t);
    state.rightCols(S) = (z.holdings / env_cfg.h_max).transpose();
    const Mat a = sac::actor_stochastic(agent, state, noise.normal_matrix(1, A));
    return Eigen::VectorXd(a.row(0).transpose());
  };
  return env::rollout(pool.subset(i), policy, env_cfg);
}

SacBatch build_batch(const SubsetPool& pool, std::size_t i, const std::vector<env::Transition>& transitions,
                     const std::vector<std::size_t>& idx, const env::EnvConfig& env_cfg,
                     const transforms::TransformConfig& tcfg, const std::vector<int>& ensemble_tags) {
  const Mat& market = pool.market(i);
  const Mat& closes = pool.closes(i);
  const auto B = static_cast<Eigen::Index>(idx.size());
  const auto S = pool.symbols();
  const auto md = market.cols();
  const auto A = transitions.empty() ? 0 : transitions.front().action.size();
  const auto sd = md + S;

  SacBatch b;
  b.states.resize(B, sd);
  b.actions.resize(B, A);
  b.prices.resize(B, S);
  b.cash_before.resize(B);
  b.holdings_before.resize(B, S);
  b.cash_after.resize(B);
  b.holdings_after.resize(B, S);
  b.next.resize(1 + ensemble_tags.size());
  for (auto& v : b.next) {
    v.states = Mat::Zero(B, sd);
    v.prices.resize(B, S);
    v.present = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(B, false);
  }

  const bool source_original = pool.tag(i) == transforms::kOriginal;
  const int m = pool.index(i);
  transforms::TransformConfig align = tcfg;
  align.T = pool.length(i);
  std::vector<std::optional<std::size_t>> partners;
  for (int tag : ensemble_tags) partners.push_back(source_original ? pool.find(m, tag) : std::nullopt);

  for (Eigen::Index r = 0; r < B; ++r) {
    const auto& tr = transitions.at(idx[static_cast<std::size_t>(r)]);
    const int t = tr.t;
    const Eigen::RowVectorXd hb = (tr.before.holdings / env_cfg.h_max).transpose();
    const Eigen::RowVectorXd ha = (tr.after.holdings / env_cfg.h_max).transpose();
    b.states.row(r) << market.row(t), hb;
    b.actions.row(r) = tr.action.transpose();
    b.prices.row(r) = closes.row(t);
    b.cash_before[r] = tr.before.cash;
    b.holdings_before.row(r) = tr.before.holdings.transpose();
    b.cash_after[r] = tr.after.cash;
    b.holdings_after.row(r) = tr.after.holdings.transpose();

    b.next[0].states.row(r) << market.row(t + 1), ha;
    b.next[0].prices.row(r) = closes.row(t + 1);
    b.next[0].present[r] = true;

    for (std::size_t v = 0; v < ensemble_tags.size(); ++v) {
      auto& nv = b.next[v + 1];
      nv.prices.row(r) = closes.row(t);
      if (!partners[v]) continue;
      const auto u = transforms::align_index(t + 1, ensemble_tags[v], align);
      const auto j = *partners[v];
      if (!u || *u < 1 || *u >= pool.length(j)) continue;
      const Mat& mj = pool.market(j);
      const Mat& cj = pool.closes(j);
      nv.states.row(r) << mj.row(*u), ha;
      // One-step growth of the transformed series applied to today's prices.
      nv.prices.row(r) = closes.row(t).cwiseProduct(cj.row(*u)).cwiseQuotient(cj.row(*u - 1));
      nv.present[r] = true;
    }
  }
  return b;
}

void write_log_csv(std::ostream& out, const std::vector<LogRow>& rows) {
  out << "step,critic_loss,actor_loss,probe_critic_loss,mean_reward\n";
  for (const auto& r : rows)
    out << r.step << ',' << format_double(r.critic_loss) << ',' << format_double(r.actor_loss) << ','
        << format_double(r.probe_critic_loss) << ',' << format_double(r.mean_reward) << '\n';
}

Probe make_probe(const SubsetPool& pool, const AgentParams& agent, const env::EnvConfig& env_cfg,
                 const TrainConfig& cfg) {
  std::size_t entry = 0;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool.tag(i) == transforms::kOriginal) {
      entry = i;
      break;
    }
  Rng rng = Rng::stream(cfg.seed, {kProbeStream, 0});
  const auto trs = rollout_entry(pool, entry, agent, env_cfg, rng);
  const auto B = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), trs.size());
  const auto idx = rng.sample_without_replacement(trs.size(), B);
  Probe p;
  p.batch = build_batch(pool, entry, trs, idx, env_cfg, {}, {});
  p.noise = rng.normal_matrix(static_cast<Eigen::Index>(B), agent.action_dim());
  return p;
}

double probe_critic_loss(const Probe& probe, const AgentParams& agent) {
  diff::NoGradGuard no_grad;
  const Vector y = sac::td_target_inner(probe.batch, agent, probe.noise);
  const Mat q = sac::critic_values(agent.critic_spec, agent.critic1, probe.batch.states, probe.batch.actions);
  return (q.col(0) - y).squaredNorm() / static_cast<double>(y.size());
}

TrainResult train_ood(const SubsetPool& pool, AgentParams agent, const TrainConfig& cfg,
                      const env::EnvConfig& env_cfg, const transforms::TransformConfig& tcfg) {
  cfg.validate();
  if (pool.size() == 0) throw ValidationError("train_ood: empty dataset collection");
  TrainResult res;
  Optimizers opt = Optimizers::for_agent(agent);
  const Probe probe = make_probe(pool, agent, env_cfg, cfg);
  const auto A = agent.action_dim();
  const bool ensemble = cfg.outer_target == OuterTarget::ensemble;
  const std::vector<int> tags = ensemble ? cfg.ensemble_tags : std::vector<int>{};
  const InnerRates rates{cfg.eta1, cfg.alpha1};

  for (int it = 0; it < cfg.t1; ++it) {
    const auto K = std::min<std::size_t>(static_cast<std::size_t>(cfg.K), pool.size());
    const auto chosen = stream(cfg, kStageOod, it, kSampleSubsets).sample_without_replacement(pool.size(), K);
    std::vector<SubsetBatch> sbs;
    double reward_sum = 0.0;
    Eigen::Index reward_count = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto i = chosen[k];
      Rng noise = stream(cfg, kStageOod, it, kRolloutNoise, k);
      const auto trs = rollout_entry(pool, i, agent, env_cfg, noise);
      const auto B = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), trs.size());
      const auto idx = stream(cfg, kStageOod, it, kBatchIndices, k).sample_without_replacement(trs.size(), B);
      SubsetBatch sb;
      sb.entry = i;
      sb.inner_batch = build_batch(pool, i, trs, idx, env_cfg, tcfg, tags);
      const auto rows = static_cast<Eigen::Index>(B);
      sb.inner_targets =
          sac::td_target_inner(sb.inner_batch, agent, normal(stream(cfg, kStageOod, it, kInnerTargetNoise, k), rows, A));
      std::vector<Mat> tnoise;
      for (std::size_t v = 0; v < sb.inner_batch.next.size(); ++v)
        tnoise.push_back(normal(stream(cfg, kStageOod, it, kOuterTargetNoise, k, v), rows, A));
      sb.outer_targets = ensemble ? sac::td_target_ensemble(sb.inner_batch, agent, tnoise)
                                  : sac::td_target_inner(sb.inner_batch, agent, tnoise[0]);
      sb.inner_noise = normal(stream(cfg, kStageOod, it, kInnerActorNoise, k), rows, A);
      sb.outer_noise = normal(stream(cfg, kStageOod, it, kOuterActorNoise, k), rows, A);
      sb.outer_batch = sb.inner_batch;
      const Vector r = sac::variant_rewards(sb.inner_batch, 0);
      reward_sum += r.sum();
      reward_count += r.size();
      sbs.push_back(std::move(sb));
    }
    std::vector<AdaptedSet> adapted;
    adapted.reserve(K);
    for (const auto& sb : sbs) adapted.push_back(inner_adapt(sb, agent, rates));
    const auto g = outer_gradients(sbs, adapted, agent, rates, cfg.mode, true);
    apply_outer(agent, g, cfg.eta2, cfg.alpha2, cfg.tau, opt);
    res.log.push_back({it + 1, g.critic_loss, g.actor_loss, probe_critic_loss(probe, agent),
                       reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0});
  }
  res.agent = std::move(agent);
  return res;
}

std::vector<std::size_t> recent_originals(const SubsetPool& pool, int count) {
  std::vector<std::pair<int, std::size_t>> originals;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool.tag(i) == transforms::kOriginal) originals.emplace_back(pool.index(i), i);
  std::sort(originals.begin(), originals.end());
  std::vector<std::size_t> out;
  const auto skip = originals.size() > static_cast<std::size_t>(count) ? originals.size() - static_cast<std::size_t>(count) : 0;
  for (std::size_t k = skip; k < originals.size(); ++k) out.push_back(originals[k].second);
  return out;
}

TrainResult finetune(const SubsetPool& pool, const std::vector<std::size_t>& entries, AgentParams agent,
                     const TrainConfig& cfg, const env::EnvConfig& env_cfg) {
  cfg.validate();
  if (entries.empty()) throw ValidationError("finetune: no subsets given");
  for (auto e : entries) {
    if (e >= pool.size()) throw ValidationError("finetune: subset entry out of range");
    if (pool.tag(e) != transforms::kOriginal)
      throw ValidationError("finetune accepts only original training data; subset (m=" +
                            std::to_string(pool.index(e)) + ", n=" + std::to_string(pool.tag(e)) +
                            ") is transformed");
  }
  TrainResult res;
  Optimizers opt = Optimizers::for_agent(agent);
  const auto A = agent.action_dim();
  const InnerRates rates{cfg.eta1, cfg.alpha1};
  for (int it = 0; it < cfg.t2; ++it) {
    const auto K = std::min<std::size_t>(static_cast<std::size_t>(cfg.K), entries.size());
    const auto chosen = stream(cfg, kStageFinetune, it, kSampleSubsets).sample_without_replacement(entries.size(), K);
    std::vector<SubsetBatch> sbs;
    double reward_sum = 0.0;
    Eigen::Index reward_count = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto i = entries[chosen[k]];
      Rng noise = stream(cfg, kStageFinetune, it, kRolloutNoise, k);
      const auto trs = rollout_entry(pool, i, agent, env_cfg, noise);
      const auto half = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), trs.size() / 2);
      if (half == 0) throw ValidationError("finetune: subset too short for disjoint batches");
      const auto idx = stream(cfg, kStageFinetune, it, kBatchIndices, k).sample_without_replacement(trs.size(), 2 * half);
      const std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
      const std::vector<std::size_t> ts(idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
      const std::set<std::size_t> seen(tr.begin(), tr.end());
      for (auto x : ts)
        if (seen.count(x)) throw InvariantError("finetune: train and test batches overlap");
      SubsetBatch sb;
      sb.entry = i;
      sb.inner_batch = build_batch(pool, i, trs, tr, env_cfg, {}, {});
      sb.outer_batch = build_batch(pool, i, trs, ts, env_cfg, {}, {});
      const auto rows = static_cast<Eigen::Index>(half);
      sb.inner_targets = sac::td_target_inner(
          sb.inner_batch, agent, normal(stream(cfg, kStageFinetune, it, kInnerTargetNoise, k), rows, A));
      sb.outer_targets = sac::td_target_inner(
          sb.outer_batch, agent, normal(stream(cfg, kStageFinetune, it, kOuterTargetNoise, k), rows, A));
      sb.inner_noise = normal(stream(cfg, kStageFinetune, it, kInnerActorNoise, k), rows, A);
      sb.outer_noise = normal(stream(cfg, kStageFinetune, it, kOuterActorNoise, k), rows, A);
      const Vector r = sac::variant_rewards(sb.outer_batch, 0);
      reward_sum += r.sum();
      reward_count += r.size();
      sbs.push_back(std::move(sb));
    }
    std::vector<AdaptedSet> adapted;
    for (const auto& sb : sbs) adapted.push_back(inner_adapt(sb, agent, rates));
    const auto g = outer_gradients(sbs, adapted, agent, rates, cfg.mode, false);
    apply_outer(agent, g, cfg.eta2, cfg.alpha2, cfg.tau, opt);
    res.log.push_back({it + 1, g.critic_loss, g.actor_loss, 0.0,
                       reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0});
  }
  res.agent = std::move(agent);
  return res;
}

}  // namespace tradelab::train

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "tradelab/diff/optim.hpp"
#include "tradelab/env/env.hpp"
#include "tradelab/random.hpp"
#include "tradelab/sac/losses.hpp"
#include "tradelab/train/pool.hpp"

namespace tradelab::train {

using sac::AgentParams;
using sac::SacBatch;
using sac::Vector;

enum class BilevelMode { first_order, second_order };
enum class OuterTarget { ensemble, inner };

struct TrainConfig {
  int t1 = 2000;
  int t2 = 500;
  int K = 4;
  int batch = 32;
  double eta1 = 1e-5;    // inner critic rate
  double eta2 = 1e-4;    // outer critic rate
  double alpha1 = 1e-5;  // inner actor rate
  double alpha2 = 1e-4;  // outer actor rate
  double tau = 0.005;
  int recent_subsets = 4;  // M' for finetuning
  BilevelMode mode = BilevelMode::first_order;
  OuterTarget outer_target = OuterTarget::ensemble;
  std::vector<int> ensemble_tags = {1, 2, 3};
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Everything one subset contributes to an iteration. For the OOD stage the
// inner and outer batches coincide; finetuning uses disjoint ones.
struct SubsetBatch {
  std::size_t entry = 0;
  SacBatch inner_batch;
  Vector inner_targets;
  diff::Mat inner_noise;  // actor noise for the inner actor step
  SacBatch outer_batch;
  Vector outer_targets;
  diff::Mat outer_noise;  // actor noise for the outer actor loss
};

struct AdaptedSet {
  std::size_t subset = 0;
  diff::ParamSet actor;
  diff::ParamSet critic1;
  diff::ParamSet critic2;
  std::uint64_t batch_id = 0;
};

struct InnerRates {
  double eta1 = 0.0;
  double alpha1 = 0.0;
};

// Critics step on the inner batch, then the actor steps against the
// already adapted first critic. Base parameters are not modified.
AdaptedSet inner_adapt(const SubsetBatch& sb, const AgentParams& agent, InnerRates rates);

struct OuterGradients {
  std::vector<diff::Mat> critic1;
  std::vector<diff::Mat> critic2;
  std::vector<diff::Mat> actor;
  double critic_loss = 0.0;  // mean critic-1 outer loss over evaluated pairs
  double actor_loss = 0.0;
};

// Sum over pairs (i, j) of gradients of L_Q(outer_batch_i; phi^(j)) and
// L_pi(outer_batch_i; theta^(j), phi1^(j)) with respect to the base
// parameters. cross_pairs selects all K^2 pairs, otherwise only i = j.
// First-order mode evaluates at the adapted point; second-order mode
// differentiates through the inner step.
OuterGradients outer_gradients(const std::vector<SubsetBatch>& batches,
                               const std::vector<AdaptedSet>& adapted, const AgentParams& agent,
                               InnerRates rates, BilevelMode mode, bool cross_pairs);

struct Optimizers {
  diff::OptState actor;
  diff::OptState critic1;
  diff::OptState critic2;

  static Optimizers for_agent(const AgentParams& a);
};

// Adam step on the base parameters, then polyak on the target critics.
void apply_outer(AgentParams& agent, const OuterGradients& g, double eta2, double alpha2, double tau,
                 Optimizers& opt);

// Stochastic rollout of the current actor over pool entry i from all cash.
std::vector<env::Transition> rollout_entry(const SubsetPool& pool, std::size_t i,
                                           const AgentParams& agent, const env::EnvConfig& env_cfg,
                                           Rng& noise);

// Batch over transitions[idx]. With `ensemble_tags` non-empty and an
// original source subset, each sample also carries the aligned next state
// of every tag whose subset is in the pool; transformed sources only carry
// their own next state.
SacBatch build_batch(const SubsetPool& pool, std::size_t i, const std::vector<env::Transition>& transitions,
                     const std::vector<std::size_t>& idx, const env::EnvConfig& env_cfg,
                     const transforms::TransformConfig& tcfg, const std::vector<int>& ensemble_tags);

struct LogRow {
  int step = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double probe_critic_loss = 0.0;
  double mean_reward = 0.0;
};

void write_log_csv(std::ostream& out, const std::vector<LogRow>& rows);

struct TrainResult {
  AgentParams agent;
  std::vector<LogRow> log;
};

// Fixed probe batch: initial-policy rollout over the first original entry.
struct Probe {
  SacBatch batch;
  diff::Mat noise;
};
Probe make_probe(const SubsetPool& pool, const AgentParams& agent, const env::EnvConfig& env_cfg,
                 const TrainConfig& cfg);
double probe_critic_loss(const Probe& probe, const AgentParams& agent);

// OOD policy learning over every pool entry.
TrainResult train_ood(const SubsetPool& pool, AgentParams agent, const TrainConfig& cfg,
                      const env::EnvConfig& env_cfg, const transforms::TransformConfig& tcfg);

// In-domain finetuning over the given pool entries; every one must be an
// original subset.
TrainResult finetune(const SubsetPool& pool, const std::vector<std::size_t>& entries, AgentParams agent,
                     const TrainConfig& cfg, const env::EnvConfig& env_cfg);

// Entries of the last `count` original subsets, ordered by m.
std::vector<std::size_t> recent_originals(const SubsetPool& pool, int count);

// Purpose keys for the per-iteration random streams.
enum StreamPurpose : std::uint64_t {
  kSampleSubsets = 1,
  kRolloutNoise = 2,
  kBatchIndices = 3,
  kInnerTargetNoise = 4,
  kOuterTargetNoise = 5,
  kInnerActorNoise = 6,
  kOuterActorNoise = 7,
  kProbeStream = 8,
};
enum Stage : std::uint64_t { kStageOod = 1, kStageFinetune = 2 };

}  // namespace tradelab::train

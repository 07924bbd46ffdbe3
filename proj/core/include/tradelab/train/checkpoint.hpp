#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "tradelab/diff/container.hpp"
#include "tradelab/sac/agent.hpp"

namespace tradelab::train {

// Agent parameters rounded to float32 (the on-disk precision) plus run
// metadata: seed, config hash, config snapshot, stage, steps.
struct Checkpoint {
  sac::AgentParams agent;
  nlohmann::json meta = nlohmann::json::object();
};

Checkpoint make_checkpoint(const sac::AgentParams& agent, nlohmann::json meta);

diff::Container to_container(const Checkpoint& c);
Checkpoint checkpoint_from_container(const diff::Container& c);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tradelab::train

#include "tradelab/train/checkpoint.hpp"

#include "tradelab/error.hpp"

namespace tradelab::train {
namespace {

constexpr const char* kGroups[] = {"actor", "critic1", "critic2", "target1", "target2"};

diff::ParamSet* group(sac::AgentParams& a, int k) {
  diff::ParamSet* all[] = {&a.actor, &a.critic1, &a.critic2, &a.target1, &a.target2};
  return all[k];
}

}  // namespace

Checkpoint make_checkpoint(const sac::AgentParams& agent, nlohmann::json meta) {
  Checkpoint c{agent, std::move(meta)};
  for (int k = 0; k < 5; ++k) *group(c.agent, k) = diff::quantize_f32(*group(c.agent, k));
  return c;
}

diff::Container to_container(const Checkpoint& c) {
  diff::Container out;
  out.meta = c.meta;
  out.meta["kind"] = "checkpoint";
  out.meta["actor_spec"] = diff::to_json(c.agent.actor_spec);
  out.meta["critic_spec"] = diff::to_json(c.agent.critic_spec);
  out.meta["lambda"] = c.agent.lambda;
  out.meta["gamma"] = c.agent.gamma;
  auto copy = c.agent;
  for (int k = 0; k < 5; ++k) {
    const auto& p = *group(copy, k);
    for (std::size_t t = 0; t < p.size(); ++t) {
      const auto& m = p.tensors[t];
      diff::Tensor tensor{std::string(kGroups[k]) + "/" + p.names[t], {m.rows(), m.cols()}, diff::DType::f32, {}};
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index q = 0; q < m.cols(); ++q) tensor.data.push_back(m(r, q));
      out.tensors.push_back(std::move(tensor));
    }
  }
  return out;
}

Checkpoint checkpoint_from_container(const diff::Container& c) {
  if (c.meta.value("kind", "") != "checkpoint") throw ValidationError("file is not a checkpoint");
  Checkpoint ck;
  ck.meta = c.meta;
  try {
    ck.agent.actor_spec = diff::net_spec_from_json(c.meta.at("actor_spec"));
    ck.agent.critic_spec = diff::net_spec_from_json(c.meta.at("critic_spec"));
    ck.agent.lambda = c.meta.at("lambda").get<double>();
    ck.agent.gamma = c.meta.at("gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint manifest: ") + e.what());
  }
  for (const char* key : {"kind", "actor_spec", "critic_spec", "lambda", "gamma"}) ck.meta.erase(key);
  const diff::ParamSet actor_shape = diff::init(ck.agent.actor_spec, 0);
  const diff::ParamSet critic_shape = diff::init(ck.agent.critic_spec, 0);
  for (int k = 0; k < 5; ++k) {
    auto& p = *group(ck.agent, k);
    p = k == 0 ? actor_shape : critic_shape;
    for (std::size_t t = 0; t < p.size(); ++t) {
      const auto& tensor = c.at(std::string(kGroups[k]) + "/" + p.names[t]);
      auto& m = p.tensors[t];
      if (tensor.shape != std::vector<std::int64_t>{m.rows(), m.cols()})
        throw ValidationError("checkpoint tensor '" + tensor.name + "' has an unexpected shape");
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index q = 0; q < m.cols(); ++q) m(r, q) = tensor.data[i++];
    }
  }
  ck.agent.validate();
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  diff::write_container(path, to_container(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_container(diff::read_container(path));
}

}  // namespace tradelab::train

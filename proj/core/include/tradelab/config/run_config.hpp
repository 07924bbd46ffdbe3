#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tradelab/data/dataset.hpp"
#include "tradelab/encoder/encoder.hpp"
#include "tradelab/env/env.hpp"
#include "tradelab/eval/metrics.hpp"
#include "tradelab/train/trainer.hpp"
#include "tradelab/transforms/transforms.hpp"

namespace tradelab::config {

struct AgentConfig {
  std::vector<int> hidden = {256, 256};
  double gamma = 0.99;
  double lambda = 0.2;
};

struct EvalConfig {
  eval::MetricOptions metrics;
  int splits = 3;
  std::optional<std::string> start_date;  // defaults to the dataset test range
  std::optional<std::string> end_date;
};

// Input locations. Recorded in snapshots so a run can be replayed, but left
// out of the config hash.
struct Paths {
  std::string input_csv;
  std::string index_csv;
  std::string dataset;
  std::string checkpoint;
};

struct RunConfig {
  std::uint64_t seed = 0;
  data::PrepareConfig data;
  transforms::TransformConfig transform;
  env::EnvConfig env;
  encoder::EncoderConfig encoder;
  AgentConfig agent;
  train::TrainConfig train;
  int context_days = 120;  // history rows kept in front of every subset
  EvalConfig eval;
  Paths paths;

  void validate() const;  // throws ConfigError
};

// Unknown keys are rejected; missing keys keep their defaults.
RunConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& c);

// FNV-1a over the canonical JSON of everything except `paths`.
std::string config_hash(const RunConfig& c);

train::BilevelMode parse_bilevel_mode(const std::string& s);
std::string to_string(train::BilevelMode m);
train::OuterTarget parse_outer_target(const std::string& s);
std::string to_string(train::OuterTarget t);

}  // namespace tradelab::config

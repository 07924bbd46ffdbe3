#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tradelab/data/panel.hpp"

namespace tradelab::data {

// Correlated geometric Brownian motion market. drift/vol are per-day
// log-return mean/std per symbol.
struct SynthSpec {
  int symbols = 0;
  int days = 0;
  std::vector<double> drift;
  std::vector<double> vol;
  Matrix corr;
  std::vector<double> init_price;
  std::uint64_t seed = 0;
  std::string start_date = "2015-01-02";

  // Throws ValidationError on shape mismatch, negative vol, non-unit
  // diagonal, asymmetry or a correlation matrix that is not PSD.
  void validate() const;

  // Uniform market: every symbol shares drift/vol/price, pairwise corr rho.
  static SynthSpec uniform(int symbols, int days, double drift, double vol, double rho,
                           double init_price, std::uint64_t seed);
};

// Keys: symbols, days, drift, vol, corr, init_price, seed, optional
// start_date. drift/vol/init_price accept a scalar or a per-symbol array;
// corr accepts a scalar off-diagonal value or a full matrix.
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

PanelData synth_gbm(const SynthSpec& spec);

// Consecutive weekdays starting at `start` (ISO date, moved forward to a
// weekday if needed).
std::vector<std::string> business_days(const std::string& start, int count);

}  // namespace tradelab::data

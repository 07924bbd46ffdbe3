#include "tradelab/config/run_config.hpp"

#include <fstream>
#include <set>

#include "tradelab/error.hpp"
#include "tradelab/hash.hpp"

namespace tradelab::config {
namespace {

using nlohmann::json;

// Reads the keys of one section, rejecting any it does not know.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + name_ + "." + key + "'");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }
  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

void get_optional_string(Section& sec, const char* key, std::optional<std::string>& out) {
  if (const json* v = sec.sub(key)) {
    if (v->is_null())
      out.reset();
    else if (v->is_string())
      out = v->get<std::string>();
    else
      throw ConfigError(std::string("config key '") + key + "' must be a string or null");
  }
}

}  // namespace

train::BilevelMode parse_bilevel_mode(const std::string& s) {
  if (s == "first-order") return train::BilevelMode::first_order;
  if (s == "second-order") return train::BilevelMode::second_order;
  throw ConfigError("bilevel mode must be 'first-order' or 'second-order', got '" + s + "'");
}

std::string to_string(train::BilevelMode m) {
  return m == train::BilevelMode::first_order ? "first-order" : "second-order";
}

train::OuterTarget parse_outer_target(const std::string& s) {
  if (s == "ensemble") return train::OuterTarget::ensemble;
  if (s == "inner") return train::OuterTarget::inner;
  throw ConfigError("outer target must be 'ensemble' or 'inner', got '" + s + "'");
}

std::string to_string(train::OuterTarget t) { return t == train::OuterTarget::ensemble ? "ensemble" : "inner"; }

void RunConfig::validate() const {
  transform.validate();
  env.validate();
  encoder.validate();
  train.validate();
  if (data.min_coverage <= 0.0 || data.min_coverage > 1.0) throw ConfigError("data.min_coverage must be in (0, 1]");
  if (data.cov_window < 2) throw ConfigError("data.cov_window must be at least 2");
  if (data.test_days < 2) throw ConfigError("data.test_days must be at least 2");
  if (agent.hidden.empty()) throw ConfigError("agent.hidden must list at least one layer");
  for (int h : agent.hidden)
    if (h < 1) throw ConfigError("agent.hidden widths must be positive");
  if (!(agent.gamma >= 0.0 && agent.gamma < 1.0)) throw ConfigError("agent.gamma must be in [0, 1)");
  if (!(agent.lambda >= 0.0)) throw ConfigError("agent.lambda must be non-negative");
  if (context_days < 0) throw ConfigError("context_days must be non-negative");
  if (eval.splits < 1) throw ConfigError("eval.splits must be at least 1");
  if (eval.metrics.trading_days_per_year < 1) throw ConfigError("eval.trading_days_per_year must be positive");
}

RunConfig from_json(const json& j) {
  RunConfig c;
  Section root(j, "config");
  root.get("seed", c.seed);
  root.get("context_days", c.context_days);
  if (const json* s = root.sub("data")) {
    Section sec(*s, "data");
    sec.get("min_coverage", c.data.min_coverage);
    sec.get("cov_window", c.data.cov_window);
    sec.get("test_days", c.data.test_days);
  }
  if (const json* s = root.sub("transform")) {
    Section sec(*s, "transform");
    sec.get("alpha", c.transform.alpha);
    sec.get("T", c.transform.T);
    sec.get("delta", c.transform.delta);
  }
  if (const json* s = root.sub("env")) {
    Section sec(*s, "env");
    sec.get("initial_cash", c.env.initial_cash);
    sec.get("cost_rate", c.env.cost_rate);
    sec.get("lot", c.env.lot);
    sec.get("h_max", c.env.h_max);
  }
  if (const json* s = root.sub("encoder")) {
    Section sec(*s, "encoder");
    sec.get("D", c.encoder.D);
    sec.get("k_s", c.encoder.k_s);
    sec.get("k_l", c.encoder.k_l);
  }
  if (const json* s = root.sub("agent")) {
    Section sec(*s, "agent");
    sec.get("hidden", c.agent.hidden);
    sec.get("gamma", c.agent.gamma);
    sec.get("lambda", c.agent.lambda);
  }
  if (const json* s = root.sub("train")) {
    Section sec(*s, "train");
    sec.get("t1", c.train.t1);
    sec.get("t2", c.train.t2);
    sec.get("K", c.train.K);
    sec.get("batch", c.train.batch);
    sec.get("eta1", c.train.eta1);
    sec.get("eta2", c.train.eta2);
    sec.get("alpha1", c.train.alpha1);
    sec.get("alpha2", c.train.alpha2);
    sec.get("tau", c.train.tau);
    sec.get("recent_subsets", c.train.recent_subsets);
    sec.get("ensemble_tags", c.train.ensemble_tags);
    std::string mode = to_string(c.train.mode);
    sec.get("bilevel_mode", mode);
    c.train.mode = parse_bilevel_mode(mode);
    std::string target = to_string(c.train.outer_target);
    sec.get("outer_target", target);
    c.train.outer_target = parse_outer_target(target);
  }
  if (const json* s = root.sub("eval")) {
    Section sec(*s, "eval");
    sec.get("trading_days_per_year", c.eval.metrics.trading_days_per_year);
    sec.get("risk_free", c.eval.metrics.risk_free);
    sec.get("literal_annual_return", c.eval.metrics.literal_annual_return);
    sec.get("splits", c.eval.splits);
    get_optional_string(sec, "start_date", c.eval.start_date);
    get_optional_string(sec, "end_date", c.eval.end_date);
  }
  if (const json* s = root.sub("paths")) {
    Section sec(*s, "paths");
    sec.get("input_csv", c.paths.input_csv);
    sec.get("index_csv", c.paths.index_csv);
    sec.get("dataset", c.paths.dataset);
    sec.get("checkpoint", c.paths.checkpoint);
  }
  c.train.seed = c.seed;
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"context_days", c.context_days},
          {"data",
           {{"min_coverage", c.data.min_coverage},
            {"cov_window", c.data.cov_window},
            {"test_days", c.data.test_days}}},
          {"transform", {{"alpha", c.transform.alpha}, {"T", c.transform.T}, {"delta", c.transform.delta}}},
          {"env",
           {{"initial_cash", c.env.initial_cash},
            {"cost_rate", c.env.cost_rate},
            {"lot", c.env.lot},
            {"h_max", c.env.h_max}}},
          {"encoder", {{"D", c.encoder.D}, {"k_s", c.encoder.k_s}, {"k_l", c.encoder.k_l}}},
          {"agent", {{"hidden", c.agent.hidden}, {"gamma", c.agent.gamma}, {"lambda", c.agent.lambda}}},
          {"train",
           {{"t1", c.train.t1},
            {"t2", c.train.t2},
            {"K", c.train.K},
            {"batch", c.train.batch},
            {"eta1", c.train.eta1},
            {"eta2", c.train.eta2},
            {"alpha1", c.train.alpha1},
            {"alpha2", c.train.alpha2},
            {"tau", c.train.tau},
            {"recent_subsets", c.train.recent_subsets},
            {"ensemble_tags", c.train.ensemble_tags},
            {"bilevel_mode", to_string(c.train.mode)},
            {"outer_target", to_string(c.train.outer_target)}}},
          {"eval",
           {{"trading_days_per_year", c.eval.metrics.trading_days_per_year},
            {"risk_free", c.eval.metrics.risk_free},
            {"literal_annual_return", c.eval.metrics.literal_annual_return},
            {"splits", c.eval.splits},
            {"start_date", optional_string(c.eval.start_date)},
            {"end_date", optional_string(c.eval.end_date)}}},
          {"paths",
           {{"input_csv", c.paths.input_csv},
            {"index_csv", c.paths.index_csv},
            {"dataset", c.paths.dataset},
            {"checkpoint", c.paths.checkpoint}}}};
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void save_run_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_json(c).dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("paths");
  Fnv1a h;
  h.update(j.dump());
  return hex64(h.digest());
}

}  // namespace tradelab::config

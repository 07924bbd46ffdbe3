#include "tradelab/eval/backtest.hpp"

#include <algorithm>
#include <ostream>

#include "tradelab/error.hpp"
#include "tradelab/format.hpp"
#include "tradelab/random.hpp"

namespace tradelab::eval {
namespace {

Eigen::VectorXd close_at(const data::PreparedData& d, int day) {
  return d.panel.close.row(day).transpose();
}

void check_period(const data::PreparedData& d, Period p, const encoder::EncoderConfig& enc) {
  if (p.first < 0 || p.last >= d.panel.num_days() || p.first >= p.last)
    throw ValidationError("backtest period [" + std::to_string(p.first) + ", " + std::to_string(p.last) +
                          "] is outside the dataset (" + std::to_string(d.panel.num_days()) + " days)");
  const int warm = first_tradable_day(d, enc);
  if (p.first < warm)
    throw ValidationError("insufficient warm-up history: period starts at day " + std::to_string(p.first) +
                          ", first tradable day is " + std::to_string(warm));
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

bool BacktestReport::check_consistency() const {
  return compute_metrics(values, rewards, metric_options) == metrics;
}

bool operator==(const BacktestReport& a, const BacktestReport& b) {
  return a.dates == b.dates && a.values == b.values && a.rewards == b.rewards && a.actions == b.actions &&
         a.metrics == b.metrics && a.start_date == b.start_date && a.end_date == b.end_date &&
         a.seed == b.seed && a.config_hash == b.config_hash && a.self_consistent == b.self_consistent;
}

BacktestPolicy deterministic_policy(const sac::AgentParams& agent) {
  return [agent](const Eigen::VectorXd& s, int, const env::BalanceState&) {
    const diff::Mat a = sac::actor_deterministic(agent, s.transpose());
    return Eigen::VectorXd(a.row(0).transpose());
  };
}

int first_tradable_day(const data::PreparedData& d, const encoder::EncoderConfig& enc) {
  int warm = std::max(enc.k_s, d.covariance.window - 1);
  for (int w : data::kIndicatorWarmup) warm = std::max(warm, w);
  return warm;
}

encoder::FeatureMapEncoder make_encoder(const data::PreparedData& d, const encoder::EncoderConfig& enc) {
  return encoder::FeatureMapEncoder(enc, d.normalized.constants, d.indicator_stats);
}

BacktestReport backtest(const BacktestPolicy& policy, const data::PreparedData& d, Period period,
                        const encoder::EncoderConfig& enc_cfg, const BacktestOptions& opt,
                        const env::BalanceState* initial) {
  check_period(d, period, enc_cfg);
  opt.env.validate();
  const auto enc = make_encoder(d, enc_cfg);
  const int S = d.panel.num_symbols();
  env::BalanceState z = initial ? *initial : env::BalanceState::all_cash(opt.env.initial_cash, S);
  if (z.holdings.size() != S) throw ValidationError("initial balance does not match the universe");

  BacktestReport r;
  r.metric_options = opt.metrics;
  r.seed = opt.seed;
  r.config_hash = opt.config_hash;
  r.start_date = d.panel.dates[static_cast<std::size_t>(period.first)];
  r.end_date = d.panel.dates[static_cast<std::size_t>(period.last)];
  r.dates.push_back(r.start_date);
  r.values.push_back(env::portfolio_value(z, close_at(d, period.first)));
  for (int day = period.first; day < period.last; ++day) {
    const auto p0 = close_at(d, day);
    const auto p1 = close_at(d, day + 1);
    const auto h = enc.encode(d.panel, d.indicators, d.covariance, day);
    const Eigen::VectorXd s = encoder::state_vector(h, z.holdings, opt.env.h_max);
    const Eigen::VectorXd a = policy(s, day, z);
    if (a.size() != S || !a.allFinite()) throw InvariantError("policy returned an invalid action");
    const Eigen::VectorXd shares = env::discretize_action(a, p0, opt.env);
    const env::BalanceState next = env::execute_shares(z, shares, p0, opt.env.cost_rate, opt.env.lot);
    r.rewards.push_back(env::reward(z, next, p0, p1));
    r.actions.emplace_back(shares.data(), shares.data() + shares.size());
    z = next;
    r.values.push_back(env::portfolio_value(z, p1));
    r.dates.push_back(d.panel.dates[static_cast<std::size_t>(day + 1)]);
  }
  r.final_balance = z;
  r.metrics = compute_metrics(r.values, r.rewards, opt.metrics);
  r.self_consistent = r.check_consistency();
  return r;
}

BacktestReport backtest(const train::Checkpoint& ckpt, const data::PreparedData& d, Period period,
                        const encoder::EncoderConfig& enc, const BacktestOptions& opt,
                        const env::BalanceState* initial) {
  return backtest(deterministic_policy(ckpt.agent), d, period, enc, opt, initial);
}

std::vector<double> discounted_tails(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc = rewards[k] + gamma * acc;
    g[k] = acc;
  }
  return g;
}

DisparitySeries value_disparity(const sac::AgentParams& agent, const data::PreparedData& d, Period period,
                                double gamma, const encoder::EncoderConfig& enc, const BacktestOptions& opt) {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;
  const auto base = deterministic_policy(agent);
  BacktestPolicy recording = [&](const Eigen::VectorXd& s, int day, const env::BalanceState& z) {
    Eigen::VectorXd a = base(s, day, z);
    states.push_back(s);
    actions.push_back(a);
    return a;
  };
  const auto report = backtest(recording, d, period, enc, opt);
  const auto H = static_cast<Eigen::Index>(states.size());
  diff::Mat S(H, agent.critic_spec.input - agent.action_dim());
  diff::Mat A(H, agent.action_dim());
  for (Eigen::Index t = 0; t < H; ++t) {
    S.row(t) = states[static_cast<std::size_t>(t)].transpose();
    A.row(t) = actions[static_cast<std::size_t>(t)].transpose();
  }
  const diff::Mat q1 = sac::critic_values(agent.critic_spec, agent.critic1, S, A);
  const diff::Mat q2 = sac::critic_values(agent.critic_spec, agent.critic2, S, A);
  DisparitySeries out;
  out.tail = discounted_tails(report.rewards, gamma);
  for (Eigen::Index t = 0; t < H; ++t) {
    const double q = std::min(q1(t, 0), q2(t, 0));
    out.q.push_back(q);
    out.disparity.push_back(q - out.tail[static_cast<std::size_t>(t)]);
  }
  double sum = 0.0;
  for (double x : out.disparity) sum += x;
  out.mean = out.disparity.empty() ? 0.0 : sum / static_cast<double>(out.disparity.size());
  return out;
}

std::vector<Period> split_period(Period period, int splits) {
  if (splits < 1) throw ValidationError("need at least one split");
  const int H = period.steps();
  if (H < splits) throw ValidationError("period has fewer steps than splits");
  std::vector<Period> out;
  for (int k = 0; k < splits; ++k)
    out.push_back({period.first + k * H / splits, period.first + (k + 1) * H / splits});
  return out;
}

BacktestReport combine(const std::vector<BacktestReport>& parts, const MetricOptions& opt) {
  if (parts.empty()) throw ValidationError("combine: no reports");
  BacktestReport c = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const auto& p = parts[k];
    if (p.dates.front() != c.dates.back() || p.values.front() != c.values.back())
      throw ValidationError("combine: reports do not chain");
    c.dates.insert(c.dates.end(), p.dates.begin() + 1, p.dates.end());
    c.values.insert(c.values.end(), p.values.begin() + 1, p.values.end());
    c.rewards.insert(c.rewards.end(), p.rewards.begin(), p.rewards.end());
    c.actions.insert(c.actions.end(), p.actions.begin(), p.actions.end());
    c.end_date = p.end_date;
    c.final_balance = p.final_balance;
  }
  c.metric_options = opt;
  c.metrics = compute_metrics(c.values, c.rewards, opt);
  c.self_consistent = c.check_consistency();
  return c;
}

OnlineReport online_adapt_eval(const train::Checkpoint& ckpt, const data::PreparedData& d, Period period,
                               const encoder::EncoderConfig& enc_cfg, const BacktestOptions& opt,
                               const OnlineOptions& online) {
  check_period(d, period, enc_cfg);
  OnlineReport out;
  out.periods = split_period(period, online.splits);
  for (std::size_t k = 1; k < out.periods.size(); ++k)
    if (out.periods[k].first != out.periods[k - 1].last || out.periods[k].first >= out.periods[k].last)
      throw ValidationError("online splits must be ordered and disjoint");
  const auto enc = make_encoder(d, enc_cfg);
  sac::AgentParams agent = ckpt.agent;
  env::BalanceState balance = env::BalanceState::all_cash(opt.env.initial_cash, d.panel.num_symbols());
  for (std::size_t k = 0; k < out.periods.size(); ++k) {
    if (k > 0) {
      const Period prev = out.periods[k - 1];
      const int context = std::min(online.context_days, prev.first);
      const auto subsets = transforms::partition(d.panel.slice_days(0, prev.last + 1), prev.steps() + 1,
                                                 {prev.first, context, online.cov_window});
      const train::SubsetPool pool(subsets, enc);
      train::TrainConfig cfg = online.train;
      cfg.seed = mix64(online.train.seed ^ (0x5eed0000ULL + k));
      agent = train::finetune(pool, {0}, agent, cfg, opt.env).agent;
    }
    out.splits.push_back(backtest(deterministic_policy(agent), d, out.periods[k], enc_cfg, opt, &balance));
    balance = out.splits.back().final_balance;
  }
  out.combined = combine(out.splits, opt.metrics);
  return out;
}

nlohmann::json to_json(const BacktestReport& r) {
  return {{"start_date", r.start_date},
          {"end_date", r.end_date},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"steps", r.rewards.size()},
          {"initial_value", r.values.front()},
          {"final_value", r.values.back()},
          {"metrics",
           {{"cr", r.metrics.cr},
            {"ar", optional_number(r.metrics.ar)},
            {"sr", optional_number(r.metrics.sr.value)},
            {"sr_zero_variance", r.metrics.sr.zero_variance},
            {"mdd", r.metrics.mdd},
            {"trading_days_per_year", r.metric_options.trading_days_per_year},
            {"risk_free", r.metric_options.risk_free},
            {"ar_literal", r.metric_options.literal_annual_return}}},
          {"self_consistent", r.self_consistent},
          {"dates", r.dates},
          {"values", r.values},
          {"rewards", r.rewards},
          {"actions", r.actions}};
}

nlohmann::json to_json(const OnlineReport& r) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : r.splits) splits.push_back(to_json(s));
  return {{"mode", "online"}, {"splits", splits}, {"combined", to_json(r.combined)}};
}

std::vector<std::string> validate_report_json(const nlohmann::json& j) {
  std::vector<std::string> errors;
  auto need = [&](const nlohmann::json& obj, const char* key, auto pred, const char* what) {
    if (!obj.contains(key))
      errors.push_back(std::string("missing '") + key + "'");
    else if (!pred(obj.at(key)))
      errors.push_back(std::string("'") + key + "' must be " + what);
  };
  auto is_string = [](const nlohmann::json& v) { return v.is_string(); };
  auto is_number = [](const nlohmann::json& v) { return v.is_number(); };
  auto is_number_or_null = [](const nlohmann::json& v) { return v.is_number() || v.is_null(); };
  auto is_bool = [](const nlohmann::json& v) { return v.is_boolean(); };
  auto is_uint = [](const nlohmann::json& v) { return v.is_number_unsigned(); };
  auto numbers = [](const nlohmann::json& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& x) { return x.is_number(); });
  };
  if (!j.is_object()) return {"report must be a JSON object"};
  need(j, "start_date", is_string, "a string");
  need(j, "end_date", is_string, "a string");
  need(j, "seed", is_uint, "an unsigned integer");
  need(j, "config_hash", is_string, "a string");
  need(j, "steps", is_uint, "an unsigned integer");
  need(j, "initial_value", is_number, "a number");
  need(j, "final_value", is_number, "a number");
  need(j, "self_consistent", is_bool, "a boolean");
  need(j, "values", numbers, "an array of numbers");
  need(j, "rewards", numbers, "an array of numbers");
  need(j, "dates", [](const nlohmann::json& v) { return v.is_array(); }, "an array");
  need(j, "actions", [](const nlohmann::json& v) { return v.is_array(); }, "an array");
  if (j.contains("metrics") && j.at("metrics").is_object()) {
    const auto& m = j.at("metrics");
    need(m, "cr", is_number, "a number");
    need(m, "ar", is_number_or_null, "a number or null");
    need(m, "sr", is_number_or_null, "a number or null");
    need(m, "sr_zero_variance", is_bool, "a boolean");
    need(m, "mdd", is_number, "a number");
    need(m, "trading_days_per_year", is_number, "a number");
    need(m, "risk_free", is_number, "a number");
    need(m, "ar_literal", is_bool, "a boolean");
  } else {
    errors.push_back("missing object 'metrics'");
  }
  if (errors.empty()) {
    const auto steps = j.at("steps").get<std::size_t>();
    if (j.at("values").size() != steps + 1) errors.push_back("'values' must hold steps + 1 entries");
    if (j.at("rewards").size() != steps) errors.push_back("'rewards' must hold steps entries");
    if (j.at("dates").size() != steps + 1) errors.push_back("'dates' must hold steps + 1 entries");
    if (j.at("actions").size() != steps) errors.push_back("'actions' must hold steps entries");
  }
  return errors;
}

void write_value_csv(std::ostream& out, const BacktestReport& r) {
  out << "date,A_t,r_t\n";
  for (std::size_t t = 0; t < r.values.size(); ++t) {
    out << r.dates[t] << ',' << format_double(r.values[t]) << ',';
    if (t < r.rewards.size()) out << format_double(r.rewards[t]);
    out << '\n';
  }
}

void write_disparity_csv(std::ostream& out, const BacktestReport& r, const DisparitySeries& d) {
  out << "date,q,discounted_return,disparity\n";
  for (std::size_t t = 0; t < d.disparity.size(); ++t)
    out << r.dates[t] << ',' << format_double(d.q[t]) << ',' << format_double(d.tail[t]) << ','
        << format_double(d.disparity[t]) << '\n';
}

}  // namespace tradelab::eval

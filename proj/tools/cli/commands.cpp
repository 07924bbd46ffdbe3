#include "cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tradelab/config/pipeline.hpp"
#include "tradelab/config/run_config.hpp"
#include "tradelab/data/csv.hpp"
#include "tradelab/data/dataset.hpp"
#include "tradelab/data/synth.hpp"
#include "tradelab/error.hpp"
#include "tradelab/eval/backtest.hpp"
#include "tradelab/format.hpp"
#include "tradelab/train/checkpoint.hpp"

namespace tradelab::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory")->required();
}

config::RunConfig load_config(const Common& c) {
  config::RunConfig cfg = c.config.empty() ? config::RunConfig{} : config::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.train.seed = cfg.seed;
  return cfg;
}

fs::path output_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error("cannot create output directory '" + out + "'");
  return fs::path(out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

void write_json(const fs::path& p, const json& j) {
  auto f = open_out(p);
  f << j.dump(2) << '\n';
}

std::string require_path(const std::string& flag_value, const std::string& config_value, const char* flag) {
  const std::string& p = flag_value.empty() ? config_value : flag_value;
  if (p.empty()) throw ConfigError(std::string("missing required input: pass ") + flag);
  if (!fs::exists(p)) throw ConfigError(std::string(flag) + ": file '" + p + "' does not exist");
  return p;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// Index levels as "date,close" rows covering every panel date; returns are
// close-to-close with a zero first entry.
std::vector<double> load_index_returns(const std::string& path, const data::PanelData& panel) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open index CSV '" + path + "'");
  std::map<std::string, double> level;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'date,close'", lineno);
    const std::string date = line.substr(0, comma);
    if (lineno == 1 && !data::is_iso_date(date)) continue;
    if (!data::is_iso_date(date)) throw ParseError("bad date '" + date + "'", lineno);
    double v = 0.0;
    try {
      v = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError("bad index level", lineno);
    }
    if (!(v > 0.0)) throw ParseError("index level must be positive", lineno);
    if (!level.emplace(date, v).second) throw ConflictError("duplicate index date " + date);
  }
  std::vector<double> r(panel.dates.size(), 0.0);
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    const auto it = level.find(panel.dates[t]);
    if (it == level.end()) throw ValidationError("index CSV has no level for " + panel.dates[t]);
    if (t > 0) r[t] = it->second / level.at(panel.dates[t - 1]) - 1.0;
  }
  return r;
}

void print_metrics_row(std::ostream& out, const std::string& label, const json& r) {
  const auto& m = r.at("metrics");
  auto num = [](const json& v) {
    if (v.is_null()) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v.get<double>();
    return s.str();
  };
  out << std::left << std::setw(10) << label << std::setw(12) << r.at("start_date").get<std::string>()
      << std::setw(12) << r.at("end_date").get<std::string>() << std::right << std::setw(10) << num(m.at("cr"))
      << std::setw(10) << num(m.at("ar")) << std::setw(10) << num(m.at("sr")) << std::setw(10)
      << num(m.at("mdd")) << '\n';
}

int cmd_synth(const std::string& spec_path, const Common& c, std::ostream& out) {
  json spec_json = read_json_file(require_path(spec_path, "", "--spec"));
  auto spec = data::synth_spec_from_json(spec_json);
  if (c.seed) spec.seed = *c.seed;
  spec.validate();
  const auto panel = data::synth_gbm(spec);
  const auto dir = output_dir(c.out);
  {
    auto f = open_out(dir / "panel.csv");
    data::write_ohlcv(f, panel);
  }
  write_json(dir / "synth_spec.json", data::to_json(spec));
  out << "wrote " << panel.num_symbols() << " symbols x " << panel.num_days() << " days to "
      << (dir / "panel.csv").string() << '\n';
  return 0;
}

int cmd_prepare(const std::string& input, const std::string& index_csv, const Common& c, std::ostream& out) {
  auto cfg = load_config(c);
  cfg.paths.input_csv = require_path(input, cfg.paths.input_csv, "--input");
  if (!index_csv.empty()) cfg.paths.index_csv = index_csv;
  cfg.validate();
  const auto raw = data::load_ohlcv(cfg.paths.input_csv);
  std::vector<double> index_returns;
  if (!cfg.paths.index_csv.empty())
    index_returns = load_index_returns(require_path(cfg.paths.index_csv, "", "--index-csv"), raw);
  const auto d = data::prepare(raw, cfg.data, index_returns);
  const auto dir = output_dir(c.out);
  cfg.paths.dataset = (dir / "dataset.tlc").string();
  data::save_dataset(dir / "dataset.tlc", d);
  config::save_run_config((dir / "config.json").string(), cfg);
  out << "universe " << d.panel.num_symbols() << " of " << d.raw_symbols << " symbols, " << d.panel.num_days()
      << " days (train " << d.train.size() << ", test " << d.test.size() << ")\n";
  return 0;
}

int cmd_inspect(const std::string& dataset, const std::optional<int>& m, const Common& c, std::ostream& out) {
  auto cfg = load_config(c);
  cfg.paths.dataset = require_path(dataset, cfg.paths.dataset, "--dataset");
  cfg.validate();
  const auto d = data::load_dataset(cfg.paths.dataset);
  const auto subsets = transforms::expand(config::training_subsets(d, cfg), cfg.transform);
  json summary = {{"symbols", d.panel.num_symbols()},
                  {"T", cfg.transform.T},
                  {"context_days", cfg.context_days},
                  {"originals", subsets.size() / 4},
                  {"subsets", json::array()}};
  const auto dir = output_dir(c.out);
  for (const auto& s : subsets) {
    summary["subsets"].push_back({{"m", s.m},
                                   {"n", s.n},
                                   {"length", s.length()},
                                   {"first_date", s.panel.dates[static_cast<std::size_t>(s.context)]},
                                   {"last_date", s.panel.dates.back()}});
    if (m && *m == s.m) {
      auto f = open_out(dir / ("subset_m" + std::to_string(s.m) + "_n" + std::to_string(s.n) + ".csv"));
      data::write_ohlcv(f, s.panel.slice_days(s.context, s.panel.num_days()));
    }
  }
  if (m && (*m < 0 || static_cast<std::size_t>(*m) >= subsets.size() / 4))
    throw ValidationError("--m " + std::to_string(*m) + " is not a subset index");
  write_json(dir / "subsets.json", summary);
  config::save_run_config((dir / "config.json").string(), cfg);
  out << summary.dump(2) << '\n';
  return 0;
}

json checkpoint_meta(const config::RunConfig& cfg, const std::string& stage, int steps) {
  return {{"seed", cfg.seed},
          {"config_hash", config::config_hash(cfg)},
          {"config", config::to_json(cfg)},
          {"stage", stage},
          {"steps", steps}};
}

void write_log(const fs::path& p, const std::vector<train::LogRow>& rows) {
  auto f = open_out(p);
  train::write_log_csv(f, rows);
}

struct TrainFlags {
  std::string dataset;
  std::string checkpoint;
  std::optional<int> t1;
  std::optional<int> t2;
  std::optional<std::string> mode;
  std::optional<std::string> outer_target;
  bool finetune = false;
};

void apply_train_flags(config::RunConfig& cfg, const TrainFlags& f) {
  if (f.t1) cfg.train.t1 = *f.t1;
  if (f.t2) cfg.train.t2 = *f.t2;
  if (f.mode) cfg.train.mode = config::parse_bilevel_mode(*f.mode);
  if (f.outer_target) cfg.train.outer_target = config::parse_outer_target(*f.outer_target);
}

int cmd_train(const TrainFlags& f, const Common& c, std::ostream& out) {
  auto cfg = load_config(c);
  apply_train_flags(cfg, f);
  cfg.paths.dataset = require_path(f.dataset, cfg.paths.dataset, "--dataset");
  cfg.validate();
  const auto d = data::load_dataset(cfg.paths.dataset);
  const auto start = config::initial_agent(d, cfg);
  const auto res = config::run_training(d, cfg, start, f.finetune);
  const auto dir = output_dir(c.out);
  const int steps = cfg.train.t1 + (f.finetune ? cfg.train.t2 : 0);
  const auto ckpt = train::make_checkpoint(res.agent, checkpoint_meta(cfg, f.finetune ? "ood+finetune" : "ood", steps));
  train::save_checkpoint(dir / "checkpoint.tlc", ckpt);
  write_log(dir / "train_log.csv", res.ood_log);
  if (f.finetune) write_log(dir / "finetune_log.csv", res.finetune_log);
  cfg.paths.checkpoint = (dir / "checkpoint.tlc").string();
  config::save_run_config((dir / "config.json").string(), cfg);
  out << "trained " << steps << " iterations; checkpoint " << cfg.paths.checkpoint << '\n';
  return 0;
}

int cmd_finetune(const TrainFlags& f, const Common& c, std::ostream& out) {
  auto cfg = load_config(c);
  apply_train_flags(cfg, f);
  cfg.paths.dataset = require_path(f.dataset, cfg.paths.dataset, "--dataset");
  cfg.paths.checkpoint = require_path(f.checkpoint, cfg.paths.checkpoint, "--checkpoint");
  cfg.validate();
  const auto d = data::load_dataset(cfg.paths.dataset);
  const auto base = train::load_checkpoint(cfg.paths.checkpoint);
  const auto res = config::run_finetune(d, cfg, base.agent);
  const auto dir = output_dir(c.out);
  train::save_checkpoint(dir / "checkpoint.tlc", train::make_checkpoint(res.agent, checkpoint_meta(cfg, "finetune", cfg.train.t2)));
  write_log(dir / "finetune_log.csv", res.log);
  cfg.paths.checkpoint = (dir / "checkpoint.tlc").string();
  config::save_run_config((dir / "config.json").string(), cfg);
  out << "finetuned " << cfg.train.t2 << " iterations; checkpoint " << cfg.paths.checkpoint << '\n';
  return 0;
}

struct BacktestFlags {
  std::string dataset;
  std::string checkpoint;
  std::string mode = "offline";
  std::string diagnostic;
  std::optional<std::string> start;
  std::optional<std::string> end;
};

int cmd_backtest(const BacktestFlags& f, const Common& c, std::ostream& out) {
  auto cfg = load_config(c);
  cfg.paths.dataset = require_path(f.dataset, cfg.paths.dataset, "--dataset");
  cfg.paths.checkpoint = require_path(f.checkpoint, cfg.paths.checkpoint, "--checkpoint");
  if (f.start) cfg.eval.start_date = *f.start;
  if (f.end) cfg.eval.end_date = *f.end;
  if (f.mode != "offline" && f.mode != "online") throw ConfigError("--mode must be 'offline' or 'online'");
  if (!f.diagnostic.empty() && f.diagnostic != "disparity") throw ConfigError("--diagnostic must be 'disparity'");
  cfg.validate();
  const auto d = data::load_dataset(cfg.paths.dataset);
  const auto ckpt = train::load_checkpoint(cfg.paths.checkpoint);
  const auto period = config::evaluation_period(d, cfg);
  const auto opt = config::backtest_options(cfg);
  const auto dir = output_dir(c.out);

  eval::BacktestReport main_report;
  if (f.mode == "offline") {
    main_report = eval::backtest(ckpt, d, period, cfg.encoder, opt);
    json j = eval::to_json(main_report);
    j["mode"] = "offline";
    write_json(dir / "report.json", j);
  } else {
    const auto online = eval::online_adapt_eval(ckpt, d, period, cfg.encoder, opt, config::online_options(cfg));
    main_report = online.combined;
    write_json(dir / "report.json", eval::to_json(online));
    for (std::size_t k = 0; k < online.splits.size(); ++k) {
      auto vf = open_out(dir / ("values_split" + std::to_string(k + 1) + ".csv"));
      eval::write_value_csv(vf, online.splits[k]);
    }
  }
  {
    auto vf = open_out(dir / "values.csv");
    eval::write_value_csv(vf, main_report);
  }
  if (f.diagnostic == "disparity") {
    const auto series = eval::value_disparity(ckpt.agent, d, period, ckpt.agent.gamma, cfg.encoder, opt);
    const auto report = eval::backtest(ckpt, d, period, cfg.encoder, opt);
    auto df = open_out(dir / "disparity.csv");
    eval::write_disparity_csv(df, report, series);
    out << "mean value disparity " << format_double(series.mean) << '\n';
  }
  config::save_run_config((dir / "config.json").string(), cfg);
  out << f.mode << " backtest " << main_report.start_date << " .. " << main_report.end_date << ": CR "
      << format_double(main_report.metrics.cr) << ", MDD " << format_double(main_report.metrics.mdd) << '\n';
  return 0;
}

int cmd_report(const std::string& path, std::ostream& out) {
  const json j = read_json_file(require_path(path, "", "--report"));
  std::vector<std::pair<std::string, const json*>> rows;
  if (j.contains("splits")) {
    if (!j.at("splits").is_array() || !j.contains("combined")) throw ValidationError("malformed online report");
    for (std::size_t k = 0; k < j.at("splits").size(); ++k)
      rows.emplace_back("split " + std::to_string(k + 1), &j.at("splits").at(k));
    rows.emplace_back("combined", &j.at("combined"));
  } else {
    rows.emplace_back("offline", &j);
  }
  for (const auto& [label, r] : rows) {
    const auto errors = eval::validate_report_json(*r);
    if (!errors.empty()) {
      std::string msg = label + " report fails the schema:";
      for (const auto& e : errors) msg += "\n  " + e;
      throw ValidationError(msg);
    }
  }
  out << std::left << std::setw(10) << "" << std::setw(12) << "start" << std::setw(12) << "end" << std::right
      << std::setw(10) << "CR" << std::setw(10) << "AR" << std::setw(10) << "SR" << std::setw(10) << "MDD" << '\n';
  for (const auto& [label, r] : rows) print_metrics_row(out, label, *r);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"tradelab: market data preparation, agent training and backtesting"};
  app.require_subcommand(1);

  Common common;
  std::string input, index_csv, spec_path, report_path;
  std::optional<int> inspect_m;
  TrainFlags tf;
  BacktestFlags bf;

  auto* data_cmd = app.add_subcommand("data", "Dataset commands");
  data_cmd->require_subcommand(1);
  auto* prepare = data_cmd->add_subcommand("prepare", "OHLCV CSV to a prepared dataset");
  add_common(prepare, common);
  prepare->add_option("--input", input, "OHLCV CSV (date,symbol,open,high,low,close,volume)");
  prepare->add_option("--index-csv", index_csv, "Market index levels (date,close) for gap filling");
  auto* synth = data_cmd->add_subcommand("synth", "Synthetic GBM market from a JSON spec");
  add_common(synth, common);
  synth->add_option("--spec", spec_path, "JSON market spec");

  auto* transform_cmd = app.add_subcommand("transform", "Subset commands");
  transform_cmd->require_subcommand(1);
  auto* inspect = transform_cmd->add_subcommand("inspect", "Partition and transform the training range");
  add_common(inspect, common);
  inspect->add_option("--dataset", tf.dataset, "Prepared dataset");
  inspect->add_option("--m", inspect_m, "Write the four variants of subset m as CSV");

  auto add_train_flags = [&](CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--dataset", tf.dataset, "Prepared dataset");
    cmd->add_option("--t1", tf.t1, "OOD iterations");
    cmd->add_option("--t2", tf.t2, "Finetuning iterations");
    cmd->add_option("--bilevel-mode", tf.mode, "first-order | second-order");
    cmd->add_option("--outer-target", tf.outer_target, "ensemble | inner");
  };
  auto* train_cmd = app.add_subcommand("train", "OOD policy learning");
  add_train_flags(train_cmd);
  train_cmd->add_flag("--finetune", tf.finetune, "Continue with in-domain finetuning");
  auto* finetune_cmd = app.add_subcommand("finetune", "In-domain finetuning of a checkpoint");
  add_train_flags(finetune_cmd);
  finetune_cmd->add_option("--checkpoint", tf.checkpoint, "Checkpoint to start from");

  auto* backtest_cmd = app.add_subcommand("backtest", "Evaluate a checkpoint");
  add_common(backtest_cmd, common);
  backtest_cmd->add_option("--dataset", bf.dataset, "Prepared dataset");
  backtest_cmd->add_option("--checkpoint", bf.checkpoint, "Checkpoint");
  backtest_cmd->add_option("--mode", bf.mode, "offline | online")->capture_default_str();
  backtest_cmd->add_option("--diagnostic", bf.diagnostic, "disparity");
  backtest_cmd->add_option("--start", bf.start, "First decision date");
  backtest_cmd->add_option("--end", bf.end, "Last valuation date");

  auto* report_cmd = app.add_subcommand("report", "Validate and summarise a backtest report");
  report_cmd->add_option("--report", report_path, "report.json")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(input, index_csv, common, out);
    if (synth->parsed()) return cmd_synth(spec_path, common, out);
    if (inspect->parsed()) return cmd_inspect(tf.dataset, inspect_m, common, out);
    if (train_cmd->parsed()) return cmd_train(tf, common, out);
    if (finetune_cmd->parsed()) return cmd_finetune(tf, common, out);
    if (backtest_cmd->parsed()) return cmd_backtest(bf, common, out);
    if (report_cmd->parsed()) return cmd_report(report_path, out);
    throw InvariantError("no command dispatched");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tradelab::cli

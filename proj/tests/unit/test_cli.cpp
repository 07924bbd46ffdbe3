#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli/commands.hpp"
#include "support/fixtures.hpp"
#include "tradelab/config/pipeline.hpp"
#include "tradelab/data/csv.hpp"
#include "tradelab/data/dataset.hpp"
#include "tradelab/eval/backtest.hpp"
#include "tradelab/train/checkpoint.hpp"

namespace tl = tradelab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = tl::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

const json kSmallConfig = {
    {"seed", 5},
    {"context_days", 60},
    {"data", {{"cov_window", 20}, {"test_days", 40}}},
    {"transform", {{"T", 16}}},
    {"encoder", {{"D", 4}}},
    {"agent", {{"hidden", {8, 8}}}},
    {"train", {{"K", 2}, {"batch", 8}, {"t1", 3}, {"t2", 2}, {"recent_subsets", 2}}},
};

// Synth market, prepared dataset and config in one temp dir.
class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    write_text(dir_ / "spec.json",
               json{{"symbols", 3}, {"days", 300}, {"drift", 0.0005}, {"vol", 0.01}, {"corr", 0.2},
                    {"init_price", 50.0}, {"seed", 7}}
                   .dump());
    write_text(dir_ / "cfg.json", kSmallConfig.dump());
    ASSERT_EQ(run({"data", "synth", "--spec", path("spec.json"), "--out", path("synth")}).code, 0);
    const auto r = run({"data", "prepare", "--input", path("synth/panel.csv"), "--config", path("cfg.json"),
                        "--out", path("prep")});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::string path(const std::string& rel) const { return (dir_.path() / rel).string(); }

  fixture::TempDir dir_{"cli"};
};

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train", "--no-such-flag", "--out", "x"}).code, 1);
}

TEST(Cli, MissingInputsNameTheFlag) {
  fixture::TempDir dir("cli_missing");
  const auto r = run({"train", "--out", (dir / "t").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--dataset"), std::string::npos) << r.err;
  const auto p = run({"data", "prepare", "--out", (dir / "p").string()});
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.err.find("--input"), std::string::npos);
  const auto q = run({"data", "prepare", "--input", (dir / "nope.csv").string(), "--out", (dir / "p").string()});
  EXPECT_EQ(q.code, 1);
  EXPECT_NE(q.err.find("does not exist"), std::string::npos);
}

TEST(Cli, SynthWritesDeterministicCsv) {
  fixture::TempDir dir("cli_synth");
  write_text(dir / "spec.json",
             json{{"symbols", 3}, {"days", 300}, {"drift", 0.0}, {"vol", 0.01}, {"corr", 0.0},
                  {"init_price", 10.0}, {"seed", 1}}
                 .dump());
  ASSERT_EQ(run({"data", "synth", "--spec", (dir / "spec.json").string(), "--seed", "7", "--out",
                 (dir / "a").string()})
                .code,
            0);
  ASSERT_EQ(run({"data", "synth", "--spec", (dir / "spec.json").string(), "--seed", "7", "--out",
                 (dir / "b").string()})
                .code,
            0);
  const auto a = fixture::read_file(dir / "a" / "panel.csv");
  EXPECT_EQ(a, fixture::read_file(dir / "b" / "panel.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 901);

  write_text(dir / "flat.json",
             json{{"symbols", 2}, {"days", 20}, {"drift", 0.0}, {"vol", 0.0}, {"corr", 0.0},
                  {"init_price", 10.0}, {"seed", 1}}
                 .dump());
  ASSERT_EQ(run({"data", "synth", "--spec", (dir / "flat.json").string(), "--out", (dir / "f").string()}).code, 0);
  const auto flat = tl::data::load_ohlcv((dir / "f" / "panel.csv").string());
  EXPECT_EQ(flat.close.minCoeff(), 10.0);
  EXPECT_EQ(flat.close.maxCoeff(), 10.0);

  write_text(dir / "bad.json", json{{"symbols", 2}, {"days", 20}, {"drift", 0.0}, {"vol", -1.0}, {"corr", 0.0},
                                    {"init_price", 10.0}, {"seed", 1}}
                                   .dump());
  EXPECT_EQ(run({"data", "synth", "--spec", (dir / "bad.json").string(), "--out", (dir / "g").string()}).code, 1);
}

TEST(Cli, PrepareRejectsEmptyUniverse) {
  fixture::TempDir dir("cli_empty");
  std::string csv = "date,symbol,open,high,low,close,volume\n";
  const auto dates = tl::data::business_days("2020-01-01", 10);
  for (std::size_t t = 0; t < dates.size(); ++t)
    if (t % 2 == 0) csv += dates[t] + ",A,1,1,1,1,100\n" + dates[t + 1] + ",B,1,1,1,1,100\n";
  write_text(dir / "in.csv", csv);
  write_text(dir / "cfg.json", json{{"data", {{"test_days", 3}}}}.dump());
  const auto r = run({"data", "prepare", "--input", (dir / "in.csv").string(), "--config", (dir / "cfg.json").string(),
                      "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("empty universe"), std::string::npos) << r.err;
}

TEST_F(CliPipeline, PrepareIsByteDeterministic) {
  ASSERT_EQ(run({"data", "prepare", "--input", path("synth/panel.csv"), "--config", path("cfg.json"), "--out",
                 path("prep2")})
                .code,
            0);
  EXPECT_EQ(fixture::read_file(path("prep/dataset.tlc")), fixture::read_file(path("prep2/dataset.tlc")));
  const auto d = tl::data::load_dataset(path("prep/dataset.tlc"));
  EXPECT_EQ(d.panel.num_symbols(), 3);
  EXPECT_EQ(d.raw_symbols, 3);
  EXPECT_TRUE(fs::exists(path("prep/config.json")));
}

TEST_F(CliPipeline, ZeroIterationTrainingKeepsTheInitialAgent) {
  const auto r = run({"train", "--dataset", path("prep/dataset.tlc"), "--config", path("cfg.json"), "--t1", "0",
                      "--t2", "0", "--finetune", "--out", path("t0")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ckpt = tl::train::load_checkpoint(path("t0/checkpoint.tlc"));
  const auto cfg = tl::config::load_run_config(path("cfg.json"));
  const auto d = tl::data::load_dataset(path("prep/dataset.tlc"));
  const auto init = tl::train::make_checkpoint(tl::config::initial_agent(d, cfg), {});
  EXPECT_TRUE(tl::diff::bit_equal(ckpt.agent.actor, init.agent.actor));
  EXPECT_TRUE(tl::diff::bit_equal(ckpt.agent.critic1, init.agent.critic1));
  EXPECT_TRUE(tl::diff::bit_equal(ckpt.agent.target2, init.agent.target2));
}

TEST_F(CliPipeline, TrainBacktestReport) {
  auto r = run({"train", "--dataset", path("prep/dataset.tlc"), "--config", path("cfg.json"), "--finetune", "--out",
                path("t")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"checkpoint.tlc", "train_log.csv", "finetune_log.csv", "config.json"})
    EXPECT_TRUE(fs::exists(path(std::string("t/") + f))) << f;

  // The snapshot alone replays the run.
  r = run({"train", "--config", path("t/config.json"), "--finetune", "--out", path("t_replay")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto first = tl::train::load_checkpoint(path("t/checkpoint.tlc"));
  const auto replay = tl::train::load_checkpoint(path("t_replay/checkpoint.tlc"));
  EXPECT_TRUE(tl::diff::bit_equal(first.agent.actor, replay.agent.actor));
  EXPECT_TRUE(tl::diff::bit_equal(first.agent.critic1, replay.agent.critic1));
  EXPECT_EQ(first.meta.at("config_hash"), replay.meta.at("config_hash"));

  r = run({"backtest", "--dataset", path("prep/dataset.tlc"), "--checkpoint", path("t/checkpoint.tlc"), "--config",
           path("cfg.json"), "--diagnostic", "disparity", "--out", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(fixture::read_file(path("b/report.json")));
  EXPECT_TRUE(tl::eval::validate_report_json(report).empty());
  EXPECT_EQ(report.at("steps"), 40);
  EXPECT_TRUE(fs::exists(path("b/values.csv")));
  EXPECT_TRUE(fs::exists(path("b/disparity.csv")));

  r = run({"backtest", "--dataset", path("prep/dataset.tlc"), "--checkpoint", path("t/checkpoint.tlc"), "--config",
           path("cfg.json"), "--mode", "online", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto online = json::parse(fixture::read_file(path("o/report.json")));
  ASSERT_EQ(online.at("splits").size(), 3u);
  for (const auto& s : online.at("splits")) EXPECT_TRUE(tl::eval::validate_report_json(s).empty());
  EXPECT_TRUE(tl::eval::validate_report_json(online.at("combined")).empty());

  r = run({"report", "--report", path("o/report.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("combined"), std::string::npos);

  r = run({"backtest", "--dataset", path("prep/dataset.tlc"), "--checkpoint", path("t/checkpoint.tlc"), "--config",
           path("cfg.json"), "--start", "1990-01-01", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  r = run({"backtest", "--dataset", path("prep/dataset.tlc"), "--checkpoint", path("t/checkpoint.tlc"), "--mode",
           "sideways", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliPipeline, TransformInspect) {
  const auto r = run({"transform", "inspect", "--dataset", path("prep/dataset.tlc"), "--config", path("cfg.json"),
                      "--m", "0", "--out", path("i")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = json::parse(fixture::read_file(path("i/subsets.json")));
  EXPECT_EQ(summary.at("subsets").size(), 4 * summary.at("originals").get<std::size_t>());
  for (int n = 0; n < 4; ++n) EXPECT_TRUE(fs::exists(path("i/subset_m0_n" + std::to_string(n) + ".csv")));
}

TEST(Cli, ReportRejectsMalformedFiles) {
  fixture::TempDir dir("cli_report");
  write_text(dir / "r.json", json{{"start_date", "x"}}.dump());
  const auto r = run({"report", "--report", (dir / "r.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("schema"), std::string::npos);
  write_text(dir / "bad.json", "{not json");
  EXPECT_EQ(run({"report", "--report", (dir / "bad.json").string()}).code, 1);
}

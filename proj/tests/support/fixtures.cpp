#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "tradelab/config/pipeline.hpp"
#include "tradelab/eval/backtest.hpp"
#include "tradelab/hash.hpp"

namespace fixture {

namespace tl = tradelab;

PanelData panel_from_closes(const Matrix& closes, const std::string& start) {
  const auto days = static_cast<int>(closes.rows());
  const auto S = static_cast<int>(closes.cols());
  std::vector<std::string> symbols;
  for (int i = 0; i < S; ++i) symbols.push_back(std::string(1, static_cast<char>('A' + i)));
  PanelData p = PanelData::empty(tl::data::business_days(start, days), symbols);
  for (int t = 0; t < days; ++t)
    for (int i = 0; i < S; ++i) {
      const double c = closes(t, i);
      const double o = t > 0 ? closes(t - 1, i) : c;
      p.open(t, i) = o;
      p.close(t, i) = c;
      p.high(t, i) = std::max(o, c) * 1.005;
      p.low(t, i) = std::min(o, c) * 0.995;
      p.volume(t, i) = 1e6 + 1000.0 * ((t * 7 + i * 3) % 11);
      p.valid(t, i) = true;
    }
  return p;
}

tl::data::SynthSpec reference_spec(std::uint64_t seed) {
  return tl::data::SynthSpec::uniform(8, 1024, 0.0, 0.01, 0.3, 100.0, seed);
}

tl::data::PreparedData synth_dataset(const tl::data::SynthSpec& spec, int test_days, int cov_window) {
  tl::data::PrepareConfig pc;
  pc.test_days = test_days;
  pc.cov_window = cov_window;
  return tl::data::prepare(tl::data::synth_gbm(spec), pc);
}

TinySetup tiny_setup(std::uint64_t seed, int symbols, std::vector<int> hidden) {
  TinySetup s;
  auto spec = tl::data::SynthSpec::uniform(symbols, 300, 0.0005, 0.01, 0.2, 50.0, seed);
  s.data = synth_dataset(spec, 40, 20);
  s.cfg.seed = seed;
  s.cfg.data.cov_window = 20;
  s.cfg.data.test_days = 40;
  s.cfg.context_days = 60;
  s.cfg.transform.T = 16;
  s.cfg.encoder.D = 4;
  s.cfg.agent.hidden = std::move(hidden);
  s.cfg.train.K = 2;
  s.cfg.train.batch = 8;
  s.cfg.train.t1 = 5;
  s.cfg.train.t2 = 3;
  s.cfg.train.recent_subsets = 3;
  s.cfg.train.seed = seed;
  return s;
}

tl::train::SubsetPool tiny_pool(const TinySetup& s, bool expand) {
  auto subsets = tl::config::training_subsets(s.data, s.cfg);
  if (expand) subsets = tl::transforms::expand(subsets, s.cfg.transform);
  return tl::train::SubsetPool(std::move(subsets), tl::eval::make_encoder(s.data, s.cfg.encoder));
}

tl::sac::SacBatch random_batch(tl::Rng& rng, int B, int state_dim, int S, int variants) {
  tl::sac::SacBatch b;
  auto uni = [&](Eigen::Index r, Eigen::Index c, double lo, double hi) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(lo, hi);
    return m;
  };
  b.states = uni(B, state_dim, -1, 1);
  b.actions = uni(B, S, -0.99, 0.99);
  b.prices = uni(B, S, 20, 120);
  b.cash_before = uni(B, 1, 1e4, 1e5).col(0);
  b.holdings_before = uni(B, S, 0, 200);
  b.cash_after = uni(B, 1, 0, 1e5).col(0);
  b.holdings_after = uni(B, S, 0, 200);
  for (int v = 0; v < variants; ++v) {
    tl::sac::NextVariant nv;
    nv.states = uni(B, state_dim, -1, 1);
    nv.prices = b.prices.cwiseProduct(uni(B, S, 0.95, 1.05));
    nv.present.resize(B);
    for (int r = 0; r < B; ++r) nv.present[r] = v == 0 || rng.uniform() < 0.6;
    b.next.push_back(std::move(nv));
  }
  return b;
}

TempDir::TempDir(const std::string& tag) {
  const auto base = std::filesystem::temp_directory_path();
  tl::Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(::getpid()));
  for (;;) {
    path_ = base / ("tradelab_" + tag + "_" + tl::hex64(rng.next_u64()).substr(0, 8));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace fixture

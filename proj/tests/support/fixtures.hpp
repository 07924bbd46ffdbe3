#pragma once

#include <filesystem>
#include <string>

#include "tradelab/config/run_config.hpp"
#include "tradelab/data/dataset.hpp"
#include "tradelab/data/synth.hpp"
#include "tradelab/random.hpp"
#include "tradelab/sac/losses.hpp"
#include "tradelab/train/pool.hpp"

namespace fixture {

using tradelab::data::Matrix;
using tradelab::data::PanelData;

// OHLCV panel around the given closes: open = previous close, a 0.5%
// intraday range and varying volumes. All cells valid.
PanelData panel_from_closes(const Matrix& closes, const std::string& start = "2020-01-01");

tradelab::data::SynthSpec reference_spec(std::uint64_t seed);

tradelab::data::PreparedData synth_dataset(const tradelab::data::SynthSpec& spec, int test_days = 128,
                                           int cov_window = 60);

// Small but complete setup for trainer tests.
struct TinySetup {
  tradelab::data::PreparedData data;
  tradelab::config::RunConfig cfg;
};
TinySetup tiny_setup(std::uint64_t seed = 3, int symbols = 3, std::vector<int> hidden = {8, 8});
tradelab::train::SubsetPool tiny_pool(const TinySetup& s, bool expand = true);

// Random batch with `variants` next-state slots; slot 0 is always present,
// others present with probability 0.6.
tradelab::sac::SacBatch random_batch(tradelab::Rng& rng, int B, int state_dim, int S, int variants);

class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

}  // namespace fixture

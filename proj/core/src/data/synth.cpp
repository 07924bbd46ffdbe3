#include "tradelab/data/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "tradelab/error.hpp"
#include "tradelab/random.hpp"

namespace tradelab::data {
namespace {

std::vector<double> scalar_or_array(const nlohmann::json& j, const char* key, int n) {
  if (!j.contains(key)) throw ValidationError(std::string("synthetic spec is missing '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(n), v.get<double>());
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw ValidationError(std::string("synthetic spec '") + key + "' must be a number or an array of " +
                          std::to_string(n) + " numbers");
  return v.get<std::vector<double>>();
}

std::string symbol_name(int i, int n) {
  const int width = n <= 10 ? 1 : n <= 100 ? 2 : n <= 1000 ? 3 : 4;
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%0*d", width, i);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (symbols < 1) throw ValidationError("synthetic spec needs at least one symbol");
  if (days < 1) throw ValidationError("synthetic spec needs at least one day");
  const auto n = static_cast<std::size_t>(symbols);
  if (drift.size() != n || vol.size() != n || init_price.size() != n)
    throw ValidationError("synthetic spec: drift/vol/init_price must have one entry per symbol");
  if (corr.rows() != symbols || corr.cols() != symbols)
    throw ValidationError("synthetic spec: correlation matrix must be symbols x symbols");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(vol[i] >= 0.0) || !std::isfinite(vol[i])) throw ValidationError("synthetic spec: volatility must be >= 0");
    if (!std::isfinite(drift[i])) throw ValidationError("synthetic spec: drift must be finite");
    if (!(init_price[i] > 0.0)) throw ValidationError("synthetic spec: initial prices must be > 0");
  }
  for (int i = 0; i < symbols; ++i) {
    if (std::abs(corr(i, i) - 1.0) > 1e-12)
      throw ValidationError("synthetic spec: correlation diagonal must be 1");
    for (int k = 0; k < i; ++k)
      if (std::abs(corr(i, k) - corr(k, i)) > 1e-12)
        throw ValidationError("synthetic spec: correlation matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10)
    throw ValidationError("synthetic spec: correlation matrix is not positive semi-definite");
}

SynthSpec SynthSpec::uniform(int symbols, int days, double drift, double vol, double rho,
                             double init_price, std::uint64_t seed) {
  SynthSpec s;
  s.symbols = symbols;
  s.days = days;
  const auto n = static_cast<std::size_t>(std::max(symbols, 0));
  s.drift.assign(n, drift);
  s.vol.assign(n, vol);
  s.init_price.assign(n, init_price);
  s.corr = Matrix::Constant(symbols, symbols, rho);
  s.corr.diagonal().setOnes();
  s.seed = seed;
  return s;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synthetic spec must be a JSON object");
  SynthSpec s;
  try {
    s.symbols = j.at("symbols").get<int>();
    s.days = j.at("days").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("start_date")) s.start_date = j.at("start_date").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
  if (s.symbols < 1) throw ValidationError("synthetic spec needs at least one symbol");
  s.drift = scalar_or_array(j, "drift", s.symbols);
  s.vol = scalar_or_array(j, "vol", s.symbols);
  s.init_price = scalar_or_array(j, "init_price", s.symbols);
  if (!j.contains("corr")) throw ValidationError("synthetic spec is missing 'corr'");
  const auto& c = j.at("corr");
  if (c.is_number()) {
    s.corr = Matrix::Constant(s.symbols, s.symbols, c.get<double>());
    s.corr.diagonal().setOnes();
  } else {
    if (!c.is_array() || static_cast<int>(c.size()) != s.symbols)
      throw ValidationError("synthetic spec 'corr' must be a number or a symbols x symbols matrix");
    s.corr.resize(s.symbols, s.symbols);
    for (int i = 0; i < s.symbols; ++i) {
      const auto& row = c.at(static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<int>(row.size()) != s.symbols)
        throw ValidationError("synthetic spec 'corr' row " + std::to_string(i) + " has the wrong length");
      for (int k = 0; k < s.symbols; ++k) s.corr(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json corr = nlohmann::json::array();
  for (int i = 0; i < spec.corr.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < spec.corr.cols(); ++k) row.push_back(spec.corr(i, k));
    corr.push_back(row);
  }
  return {{"symbols", spec.symbols}, {"days", spec.days},         {"drift", spec.drift},
          {"vol", spec.vol},         {"corr", corr},              {"init_price", spec.init_price},
          {"seed", spec.seed},       {"start_date", spec.start_date}};
}

std::vector<std::string> business_days(const std::string& start, int count) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    throw ValidationError("invalid start date '" + start + "'");
  sys_days day{year{y} / month{m} / std::chrono::day{d}};
  if (!year_month_day{day}.ok()) throw ValidationError("invalid start date '" + start + "'");
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

PanelData synth_gbm(const SynthSpec& spec) {
  spec.validate();
  const int n = spec.symbols;
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(symbol_name(i, n));
  PanelData p = PanelData::empty(business_days(spec.start_date, spec.days), std::move(names));
  p.valid.setConstant(true);

  // corr = V diag(l) V^T, factor = V diag(sqrt(l)).
  Eigen::SelfAdjointEigenSolver<Matrix> eig(spec.corr);
  const Matrix factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  Rng ret_rng = Rng::stream(spec.seed, {1});
  Rng range_rng = Rng::stream(spec.seed, {2});
  Rng vol_rng = Rng::stream(spec.seed, {3});

  Eigen::VectorXd cum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd eps(n);
  for (int t = 0; t < spec.days; ++t) {
    if (t > 0) {
      for (int i = 0; i < n; ++i) eps[i] = ret_rng.normal();
      const Eigen::VectorXd z = factor * eps;
      for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        cum[i] += spec.drift[k] + spec.vol[k] * z[i];
      }
    }
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double c = spec.init_price[k] * std::exp(cum[i]);
      const double o = t == 0 ? c : p.close(t - 1, i);
      const double range = 0.5 * spec.vol[k];
      p.open(t, i) = o;
      p.close(t, i) = c;
      p.high(t, i) = std::max(o, c) * (1.0 + range * range_rng.uniform());
      p.low(t, i) = std::min(o, c) * (1.0 - range * range_rng.uniform());
      p.volume(t, i) = std::round(std::exp(std::log(1.0e6) + 0.25 * vol_rng.normal()));
    }
  }
  return p;
}

}  // namespace tradelab::data

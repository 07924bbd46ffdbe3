#include "tradelab/diff/net.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "tradelab/error.hpp"
#include "tradelab/hash.hpp"
#include "tradelab/random.hpp"

namespace tradelab::diff {
namespace {

void check_width(const NetSpec& spec, Eigen::Index cols) {
  if (cols != spec.input)
    throw ValidationError("network input width " + std::to_string(cols) + " does not match spec width " +
                          std::to_string(spec.input));
}

}  // namespace

void NetSpec::validate() const {
  if (input < 1 || output < 1) throw ConfigError("network widths must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be >= 1");
}

nlohmann::json to_json(const NetSpec& s) {
  return {{"input", s.input},
          {"hidden", s.hidden},
          {"output", s.output},
          {"head", s.head == Head::gaussian ? "gaussian" : "linear"}};
}

NetSpec net_spec_from_json(const nlohmann::json& j) {
  NetSpec s;
  s.input = j.at("input").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.output = j.at("output").get<int>();
  const auto head = j.at("head").get<std::string>();
  if (head == "gaussian")
    s.head = Head::gaussian;
  else if (head == "linear")
    s.head = Head::linear;
  else
    throw ValidationError("unknown network head '" + head + "'");
  s.validate();
  return s;
}

Eigen::Index ParamSet::numel() const {
  Eigen::Index n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

std::uint64_t ParamSet::hash() const {
  Fnv1a h;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    h.update(names[k]);
    h.update_u64(static_cast<std::uint64_t>(tensors[k].rows()));
    h.update_u64(static_cast<std::uint64_t>(tensors[k].cols()));
    for (Eigen::Index r = 0; r < tensors[k].rows(); ++r)
      for (Eigen::Index c = 0; c < tensors[k].cols(); ++c) h.update_f64(tensors[k](r, c));
  }
  return h.digest();
}

bool ParamSet::all_finite() const {
  for (const auto& t : tensors)
    if (!t.allFinite()) return false;
  return true;
}

bool bit_equal(const ParamSet& a, const ParamSet& b) {
  if (a.names != b.names) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& x = a.tensors[k];
    const auto& y = b.tensors[k];
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) != 0)
      return false;
  }
  return true;
}

double max_abs_diff(const ParamSet& a, const ParamSet& b) {
  if (a.names != b.names) throw InvariantError("max_abs_diff: parameter sets differ in layout");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    d = std::max(d, (a.tensors[k] - b.tensors[k]).cwiseAbs().maxCoeff());
  return d;
}

ParamSet init(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamSet p;
  Rng rng(mix64(seed));
  int in = spec.input;
  for (int l = 0; l < spec.layers(); ++l) {
    const int out = l + 1 < spec.layers() ? spec.hidden[static_cast<std::size_t>(l)] : spec.final_width();
    const double bound = std::sqrt(6.0 / (in + out));
    Mat w(in, out);
    for (int r = 0; r < in; ++r)
      for (int c = 0; c < out; ++c) w(r, c) = rng.uniform(-bound, bound);
    p.names.push_back("l" + std::to_string(l) + ".W");
    p.tensors.push_back(std::move(w));
    p.names.push_back("l" + std::to_string(l) + ".b");
    p.tensors.push_back(Mat::Zero(1, out));
    in = out;
  }
  return p;
}

ParamSet zeros_like(const ParamSet& p) {
  ParamSet z = p;
  for (auto& t : z.tensors) t.setZero();
  return z;
}

Mat forward(const NetSpec& spec, const ParamSet& params, const Mat& x) {
  check_width(spec, x.cols());
  if (static_cast<int>(params.size()) != 2 * spec.layers())
    throw ValidationError("parameter set does not match the network spec");
  Mat h = x;
  for (int l = 0; l < spec.layers(); ++l) {
    const auto& w = params.tensors[static_cast<std::size_t>(2 * l)];
    const auto& b = params.tensors[static_cast<std::size_t>(2 * l + 1)];
    Mat z = h * w;
    z.rowwise() += b.row(0);
    h = l + 1 < spec.layers() ? Mat(z.array().tanh().matrix()) : std::move(z);
  }
  if (spec.head == Head::gaussian)
    h.rightCols(spec.output) = h.rightCols(spec.output).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return h;
}

Var forward(const NetSpec& spec, const std::vector<Var>& params, const Var& x) {
  check_width(spec, x.cols());
  if (static_cast<int>(params.size()) != 2 * spec.layers())
    throw ValidationError("parameter list does not match the network spec");
  Var h = x;
  for (int l = 0; l < spec.layers(); ++l) {
    Var z = add_row(matmul(h, params[static_cast<std::size_t>(2 * l)]),
                    params[static_cast<std::size_t>(2 * l + 1)]);
    h = l + 1 < spec.layers() ? tanh(z) : z;
  }
  if (spec.head == Head::gaussian) {
    Var mean = slice_cols(h, 0, spec.output);
    Var log_std = clamp_st(slice_cols(h, spec.output, spec.output), kLogStdMin, kLogStdMax);
    h = concat_cols(mean, log_std);
  }
  return h;
}

std::vector<Var> as_parameters(const ParamSet& p) {
  std::vector<Var> out;
  out.reserve(p.size());
  for (const auto& t : p.tensors) out.push_back(parameter(t));
  return out;
}

std::vector<Var> as_constants(const ParamSet& p) {
  std::vector<Var> out;
  out.reserve(p.size());
  for (const auto& t : p.tensors) out.push_back(constant(t));
  return out;
}

ParamSet values_of(const ParamSet& like, const std::vector<Var>& vars) {
  if (vars.size() != like.size()) throw InvariantError("values_of: tensor count mismatch");
  ParamSet p;
  p.names = like.names;
  for (const auto& v : vars) p.tensors.push_back(v.value());
  return p;
}

ParamSet polyak(const ParamSet& target, const ParamSet& source, double tau) {
  if (target.names != source.names) throw ValidationError("polyak: parameter sets differ in layout");
  if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("polyak: tau must lie in (0, 1]");
  ParamSet out = target;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (target.tensors[k].rows() != source.tensors[k].rows() ||
        target.tensors[k].cols() != source.tensors[k].cols())
      throw ValidationError("polyak: shape mismatch in '" + target.names[k] + "'");
    // Written as t + tau (s - t) so that t == s stays bit-exact.
    if (tau == 1.0)
      out.tensors[k] = source.tensors[k];
    else
      out.tensors[k] = target.tensors[k] + tau * (source.tensors[k] - target.tensors[k]);
  }
  return out;
}

ParamSet quantize_f32(const ParamSet& p) {
  ParamSet q = p;
  for (auto& t : q.tensors) t = t.cast<float>().cast<double>();
  return q;
}

}  // namespace tradelab::diff

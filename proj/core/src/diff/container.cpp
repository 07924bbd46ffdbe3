#include "tradelab/diff/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tradelab/error.hpp"

namespace tradelab::diff {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::size_t element_size(DType t) { return t == DType::f32 ? 4 : 8; }
const char* dtype_name(DType t) { return t == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::f32;
  if (s == "f64") return DType::f64;
  throw ValidationError("container: unknown dtype '" + s + "'");
}

}  // namespace

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const Tensor& Container::at(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw ValidationError("container has no tensor '" + name + "'");
}

bool Container::contains(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

std::string serialize(const Container& c) {
  nlohmann::json entries = nlohmann::json::array();
  std::string payload;
  for (const auto& t : c.tensors) {
    if (static_cast<std::int64_t>(t.data.size()) != t.numel())
      throw InvariantError("tensor '" + t.name + "' data size does not match its shape");
    const auto offset = payload.size();
    for (double v : t.data) {
      if (t.dtype == DType::f32)
        put_le<float>(payload, static_cast<float>(v));
      else
        put_le<double>(payload, v);
    }
    entries.push_back({{"name", t.name},
                       {"shape", t.shape},
                       {"dtype", dtype_name(t.dtype)},
                       {"offset", offset},
                       {"nbytes", payload.size() - offset}});
  }
  const nlohmann::json manifest = {
      {"format", "tradelab-container"}, {"version", 1}, {"meta", c.meta}, {"tensors", entries}};
  std::string out = manifest.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

Container deserialize(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ValidationError("container: missing manifest line");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("container: malformed manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "tradelab-container")
    throw ValidationError("container: not a tradelab container");
  Container c;
  c.meta = manifest.at("meta");
  const char* base = bytes.data() + nl + 1;
  const std::size_t available = bytes.size() - nl - 1;
  for (const auto& e : manifest.at("tensors")) {
    Tensor t;
    t.name = e.at("name").get<std::string>();
    t.shape = e.at("shape").get<std::vector<std::int64_t>>();
    t.dtype = parse_dtype(e.at("dtype").get<std::string>());
    const auto offset = e.at("offset").get<std::size_t>();
    const auto nbytes = e.at("nbytes").get<std::size_t>();
    const auto n = static_cast<std::size_t>(t.numel());
    if (nbytes != n * element_size(t.dtype) || offset + nbytes > available)
      throw ValidationError("container: tensor '" + t.name + "' payload is truncated or inconsistent");
    t.data.resize(n);
    const char* p = base + offset;
    for (std::size_t i = 0; i < n; ++i) {
      t.data[i] = t.dtype == DType::f32 ? static_cast<double>(get_le<float>(p + 4 * i))
                                        : get_le<double>(p + 8 * i);
    }
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const auto bytes = serialize(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace tradelab::diff

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tradelab::diff {

enum class DType { f32, f64 };

struct Tensor {
  std::string name;
  std::vector<std::int64_t> shape;
  DType dtype = DType::f32;
  std::vector<double> data;  // row-major; f32 tensors hold float-representable values

  std::int64_t numel() const;
};

// On-disk layout: one line of compact JSON manifest (terminated by '\n')
// followed by the little-endian tensor payloads in manifest order. The
// manifest carries {format, version, meta, tensors:[{name, shape, dtype,
// offset, nbytes}]} with offsets relative to the end of the manifest line.
struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Tensor> tensors;

  const Tensor& at(const std::string& name) const;  // throws ValidationError
  bool contains(const std::string& name) const;
};

std::string serialize(const Container& c);
Container deserialize(const std::string& bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

}  // namespace tradelab::diff

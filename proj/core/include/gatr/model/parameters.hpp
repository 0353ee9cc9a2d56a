#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gatr/nn/tensor.hpp"

namespace gatr::model {

using Tensor = nn::Tensor<double>;

/// Named parameter arrays kept in declaration order.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor::Shape shape);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  std::size_t index_of(std::string_view name) const;

  std::size_t size() const { return arrays_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::span<Tensor> arrays() { return arrays_; }
  std::span<const Tensor> arrays() const { return arrays_; }

  /// Total number of scalar parameters.
  std::size_t count() const;
  /// Parameter count summed by name prefix up to the first `depth` dot-separated parts.
  std::map<std::string, std::size_t> breakdown(int depth) const;

  bool operator==(const ParameterSet& o) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> arrays_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev);

/// Little-endian binary: magic "GATRCKP1", u32 version, u32 config length, config JSON,
/// u32 array count, then per array: u32 name length, name, u32 rank, u64 dims, f64 values.
void save_checkpoint(const std::string& path, const nlohmann::json& config, const ParameterSet& params);

struct Checkpoint {
  nlohmann::json config;
  ParameterSet params;
};
Checkpoint load_checkpoint(const std::string& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace gatr::model

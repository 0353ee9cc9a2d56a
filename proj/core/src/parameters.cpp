#include "gatr/model/parameters.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace gatr::model {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr char kMagic[8] = {'G', 'A', 'T', 'R', 'C', 'K', 'P', '1'};

template <class V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V take(std::istream& is, const std::string& path) {
  V v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(V))) {
    throw IoError("truncated checkpoint: " + path);
  }
  return v;
}

std::string take_string(std::istream& is, std::size_t n, const std::string& path) {
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw IoError("truncated checkpoint: " + path);
  }
  return s;
}

}  // namespace

Tensor& ParameterSet::add(const std::string& name, Tensor::Shape shape) {
  if (index_.count(name) != 0) {
    throw InvalidArgument("ParameterSet: duplicate name " + name);
  }
  index_.emplace(name, arrays_.size());
  names_.push_back(name);
  arrays_.emplace_back(shape);
  return arrays_.back();
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw InvalidArgument("ParameterSet: no parameter named " + std::string(name));
  }
  return it->second;
}

const Tensor& ParameterSet::get(std::string_view name) const { return arrays_[index_of(name)]; }
Tensor& ParameterSet::get(std::string_view name) { return arrays_[index_of(name)]; }

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const Tensor& t : arrays_) n += t.size();
  return n;
}

std::map<std::string, std::size_t> ParameterSet::breakdown(int depth) const {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    std::size_t pos = 0;
    for (int d = 0; d < depth && pos != std::string::npos; ++d) {
      pos = names_[i].find('.', pos == 0 ? 0 : pos + 1);
    }
    out[names_[i].substr(0, pos)] += arrays_[i].size();
  }
  return out;
}

bool ParameterSet::operator==(const ParameterSet& o) const {
  if (names_ != o.names_) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].shape() != o.arrays_[i].shape() || arrays_[i].storage() != o.arrays_[i].storage()) return false;
  }
  return true;
}

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  for (double& v : t.values()) v = n(rng);
}

void save_checkpoint(const std::string& path, const nlohmann::json& config, const ParameterSet& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  const std::string cfg = config.dump();
  put<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    const Tensor& t = params.arrays()[i];
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, 4);
    for (std::size_t d : t.shape()) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw IoError("error writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  if (take<std::uint32_t>(is, path) != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version: " + path);
  }
  Checkpoint ck;
  ck.config = nlohmann::json::parse(take_string(is, take<std::uint32_t>(is, path), path));
  const auto n = take<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = take_string(is, take<std::uint32_t>(is, path), path);
    const auto rank = take<std::uint32_t>(is, path);
    if (rank != 4) throw IoError("unsupported array rank in checkpoint: " + path);
    Tensor::Shape shape{};
    for (auto& d : shape) d = take<std::uint64_t>(is, path);
    Tensor& t = ck.params.add(name, shape);
    if (t.size() > 0 &&
        !is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw IoError("truncated checkpoint: " + path);
    }
  }
  return ck;
}

}  // namespace gatr::model

#include "gatr/model/baselines.hpp"

#include <cmath>
#include <set>

namespace gatr::model {
namespace {

void add_dense(ParameterSet& p, const std::string& prefix, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  fill_normal(p.add(prefix + ".w", {out, in, 1, 1}), rng, 1.0 / std::sqrt(static_cast<double>(in)));
  p.add(prefix + ".b", {out, 1, 1, 1});
}

template <class F>
void read_keys(const nlohmann::json& j, const std::set<std::string>& keys, const char* what, F&& read) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (keys.count(key) == 0) throw InvalidArgument(std::string(what) + " config: unknown key '" + key + "'");
  }
  read();
}

}  // namespace

void TransformerConfig::validate() const {
  if (n_blocks < 0) throw InvalidArgument("transformer config: n_blocks must be >= 0");
  for (int v : {width, n_heads, mlp_expansion, in_features, out_features}) {
    if (v < 1) throw InvalidArgument("transformer config: widths and heads must be >= 1");
  }
  if (width % n_heads != 0) throw InvalidArgument("transformer config: width must be divisible by n_heads");
}

void MlpConfig::validate() const {
  for (int v : {n_layers, width, n_items, in_features, out_features}) {
    if (v < 1) throw InvalidArgument("mlp config: counts must be >= 1");
  }
}

void to_json(nlohmann::json& j, const TransformerConfig& c) {
  j = {{"n_blocks", c.n_blocks},       {"width", c.width},
       {"n_heads", c.n_heads},         {"mlp_expansion", c.mlp_expansion},
       {"in_features", c.in_features}, {"out_features", c.out_features},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TransformerConfig& c) {
  read_keys(j, {"n_blocks", "width", "n_heads", "mlp_expansion", "in_features", "out_features", "seed"}, "transformer",
            [&] {
              auto get = [&](const char* key, auto& field) {
                if (j.contains(key)) j.at(key).get_to(field);
              };
              get("n_blocks", c.n_blocks);
              get("width", c.width);
              get("n_heads", c.n_heads);
              get("mlp_expansion", c.mlp_expansion);
              get("in_features", c.in_features);
              get("out_features", c.out_features);
              get("seed", c.seed);
            });
}

void to_json(nlohmann::json& j, const MlpConfig& c) {
  j = {{"n_layers", c.n_layers},        {"width", c.width},
       {"n_items", c.n_items},          {"in_features", c.in_features},
       {"out_features", c.out_features}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, MlpConfig& c) {
  read_keys(j, {"n_layers", "width", "n_items", "in_features", "out_features", "seed"}, "mlp", [&] {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("n_layers", c.n_layers);
    get("width", c.width);
    get("n_items", c.n_items);
    get("in_features", c.in_features);
    get("out_features", c.out_features);
    get("seed", c.seed);
  });
}

ParameterSet init_transformer_params(const TransformerConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ParameterSet p;
  const auto w = static_cast<std::size_t>(cfg.width);
  add_dense(p, "embed", static_cast<std::size_t>(cfg.in_features), w, rng);
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const std::string pre = "blocks." + std::to_string(i);
    for (const char* name : {".attn.q", ".attn.k", ".attn.v", ".attn.out"}) add_dense(p, pre + name, w, w, rng);
    const auto hidden = w * static_cast<std::size_t>(cfg.mlp_expansion);
    add_dense(p, pre + ".mlp.in", w, hidden, rng);
    add_dense(p, pre + ".mlp.out", hidden, w, rng);
  }
  add_dense(p, "head", w, static_cast<std::size_t>(cfg.out_features), rng);
  return p;
}

ParameterSet init_mlp_params(const MlpConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ParameterSet p;
  std::size_t in = static_cast<std::size_t>(cfg.n_items * cfg.in_features);
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::size_t out = i + 1 < cfg.n_layers ? static_cast<std::size_t>(cfg.width)
                                                 : static_cast<std::size_t>(cfg.n_items * cfg.out_features);
    add_dense(p, "layers." + std::to_string(i), in, out, rng);
    in = out;
  }
  return p;
}

}  // namespace gatr::model

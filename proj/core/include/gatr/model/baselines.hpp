#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "gatr/model/backend.hpp"
#include "gatr/model/parameters.hpp"

namespace gatr::model {

/// Pre-LayerNorm transformer over per-item feature vectors, with GELU MLPs.
struct TransformerConfig {
  int n_blocks = 3;
  int width = 48;
  int n_heads = 8;
  int mlp_expansion = 4;
  int in_features = 7;
  int out_features = 3;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Plain GELU MLP over all items' features flattened into one vector.
struct MlpConfig {
  int n_layers = 3;
  int width = 48;
  int n_items = 4;
  int in_features = 7;
  int out_features = 3;
  std::uint64_t seed = 0;
  void validate() const;
};

void to_json(nlohmann::json& j, const TransformerConfig& c);
void from_json(const nlohmann::json& j, TransformerConfig& c);
void to_json(nlohmann::json& j, const MlpConfig& c);
void from_json(const nlohmann::json& j, MlpConfig& c);

ParameterSet init_transformer_params(const TransformerConfig& cfg);
ParameterSet init_mlp_params(const MlpConfig& cfg);

/// features [outer, items, in_features, 1] -> [outer, items, out_features, 1].
template <class B>
typename B::Value transformer_forward(const B& b, const TransformerConfig& cfg, const Tensor& features) {
  const auto heads = static_cast<std::size_t>(cfg.n_heads);
  auto empty_mv = b.input(Tensor({features.dim(0), features.dim(1), 0, nn::kMvWidth}));
  auto x = b.dense(b.input(features), b.param("embed.w"), b.param("embed.b"));
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const std::string pre = "blocks." + std::to_string(i);
    auto h = b.layer_norm(x);
    auto q = b.dense(h, b.param(pre + ".attn.q.w"), b.param(pre + ".attn.q.b"));
    auto k = b.dense(h, b.param(pre + ".attn.k.w"), b.param(pre + ".attn.k.b"));
    auto v = b.dense(h, b.param(pre + ".attn.v.w"), b.param(pre + ".attn.v.b"));
    auto w = b.softmax(b.attention_logits(empty_mv, empty_mv, q, k, heads));
    x = b.add(x, b.dense(b.attend(w, v), b.param(pre + ".attn.out.w"), b.param(pre + ".attn.out.b")));
    auto m = b.gelu(b.dense(b.layer_norm(x), b.param(pre + ".mlp.in.w"), b.param(pre + ".mlp.in.b")));
    x = b.add(x, b.dense(m, b.param(pre + ".mlp.out.w"), b.param(pre + ".mlp.out.b")));
  }
  return b.dense(b.layer_norm(x), b.param("head.w"), b.param("head.b"));
}

/// features [outer, n_items, in_features, 1] -> [outer, n_items, out_features, 1].
template <class B>
typename B::Value mlp_forward(const B& b, const MlpConfig& cfg, const Tensor& features) {
  if (features.dim(1) != static_cast<std::size_t>(cfg.n_items) ||
      features.dim(2) != static_cast<std::size_t>(cfg.in_features)) {
    throw ShapeError("mlp_forward: the MLP baseline only accepts " + std::to_string(cfg.n_items) + " items with " +
                     std::to_string(cfg.in_features) + " features");
  }
  const std::size_t outer = features.dim(0);
  auto x = b.input(features.reshaped({outer, 1, features.dim(1) * features.dim(2), 1}));
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string pre = "layers." + std::to_string(i);
    x = b.dense(x, b.param(pre + ".w"), b.param(pre + ".b"));
    if (i + 1 < cfg.n_layers) x = b.gelu(x);
  }
  return b.reshape(x, {outer, static_cast<std::size_t>(cfg.n_items), static_cast<std::size_t>(cfg.out_features), 1});
}

}  // namespace gatr::model

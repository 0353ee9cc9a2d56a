#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gatr/model/backend.hpp"
#include "gatr/model/parameters.hpp"

namespace gatr::model {

struct GatrConfig {
  int n_blocks = 3;
  int n_mv_channels = 8;
  int n_scalar_channels = 32;
  int n_heads = 8;
  int mlp_expansion_mv = 2;
  int mlp_expansion_scalar = 2;
  bool axial = false;
  double rotary_base = 10000.0;
  std::uint64_t seed = 0;
  // Input/output stream widths.
  int in_mv_channels = 2;
  int in_scalar_channels = 1;
  int out_mv_channels = 1;
  int out_scalar_channels = 1;

  /// Throws InvalidArgument on non-positive counts or channels not divisible by heads.
  void validate() const;
};

void to_json(nlohmann::json& j, const GatrConfig& c);
/// Missing keys keep their defaults; unknown keys throw InvalidArgument.
void from_json(const nlohmann::json& j, GatrConfig& c);

/// The reference configuration of the large n-body experiment.
GatrConfig table3_config();

/// Channel counts of an equivariant linear layer with scalar-blade mixing.
struct MixedDims {
  std::size_t in_mv, in_s, out_mv, out_s;
};

/// Declares prefix.{mv.w, mv.b, s2mv.w, s.w, s.b, mv2s.w} with the documented initialization.
void add_mixed_linear(ParameterSet& p, const std::string& prefix, MixedDims d, std::mt19937_64& rng);
/// Declares prefix.{mv.w, mv.b}.
void add_equi_linear(ParameterSet& p, const std::string& prefix, std::size_t in_mv, std::size_t out_mv,
                     std::mt19937_64& rng);

ParameterSet init_gatr_params(const GatrConfig& cfg);

/// EquiJoin reference: mean of the multivector inputs over items and channels.
/// With `samples` > 0 the mean also runs over the time part of the outer axis and is
/// repeated for every time step.
Tensor gatr_reference(const Tensor& mv_inputs, std::size_t samples = 0);

template <class B>
using Streams = std::pair<typename B::Value, typename B::Value>;

/// x' = EquiLinear(x) + s->scalar blade; s' = Dense(s) + Dense(<x>_0).
template <class B>
Streams<B> mixed_linear(const B& b, const std::string& prefix, const typename B::Value& x,
                        const typename B::Value& s) {
  auto mv = b.add(b.equi_linear(x, b.param(prefix + ".mv.w"), b.param(prefix + ".mv.b")),
                  b.scalar_to_mv(b.dense(s, b.param(prefix + ".s2mv.w"))));
  auto sc = b.add(b.dense(s, b.param(prefix + ".s.w"), b.param(prefix + ".s.b")),
                  b.dense(b.scalar_part(x), b.param(prefix + ".mv2s.w")));
  return {std::move(mv), std::move(sc)};
}

/// Multi-head multivector attention with auxiliary scalars. Rotary embeddings are
/// applied to scalar queries/keys when `positions` is non-empty.
template <class B>
Streams<B> gatr_attention(const B& b, const GatrConfig& cfg, const std::string& prefix, const typename B::Value& x,
                          const typename B::Value& s, const std::vector<double>& positions) {
  const auto heads = static_cast<std::size_t>(cfg.n_heads);
  auto [q, qs] = mixed_linear(b, prefix + ".q", x, s);
  auto [k, ks] = mixed_linear(b, prefix + ".k", x, s);
  auto [v, vs] = mixed_linear(b, prefix + ".v", x, s);
  if (!positions.empty()) {
    qs = b.rotary_embed(qs, positions, cfg.rotary_base, heads);
    ks = b.rotary_embed(ks, positions, cfg.rotary_base, heads);
  }
  auto w = b.softmax(b.attention_logits(q, k, qs, ks, heads));
  return mixed_linear(b, prefix + ".out", b.attend(w, v), b.attend(w, vs));
}

/// EquiLinear (doubling) -> GeometricBilinear -> EquiLinear -> GatedGELU -> EquiLinear,
/// with a parallel Dense -> GELU -> Dense scalar path.
template <class B>
Streams<B> gatr_mlp(const B& b, const GatrConfig& cfg, const std::string& prefix, const typename B::Value& x,
                    const typename B::Value& s, const typename B::Value& ref) {
  const auto h = static_cast<std::size_t>(cfg.mlp_expansion_mv * cfg.n_mv_channels);
  auto [a, as] = mixed_linear(b, prefix + ".in", x, s);
  auto left = b.slice_channels(a, 0, h);
  auto right = b.slice_channels(a, h, h);
  auto bil = b.concat_channels(b.geometric_product(left, right), b.equi_join(left, right, ref));
  auto m = b.gated_gelu(b.equi_linear(bil, b.param(prefix + ".mid.mv.w"), b.param(prefix + ".mid.mv.b")));
  return mixed_linear(b, prefix + ".out", m, b.gelu(as));
}

/// Pre-norm block. In axial mode odd blocks attend over the time part of the outer
/// axis (outer = samples x time), with rotary embeddings on time positions.
template <class B>
Streams<B> gatr_block(const B& b, const GatrConfig& cfg, int index, const typename B::Value& x,
                      const typename B::Value& s, const typename B::Value& ref, std::size_t samples = 0) {
  const std::string prefix = "blocks." + std::to_string(index);
  auto xn = b.mv_layer_norm(x);
  auto sn = b.layer_norm(s);
  Streams<B> att;
  if (cfg.axial && index % 2 == 1) {
    const std::size_t time = b.shape(xn)[0] / samples;
    std::vector<double> positions(time);
    for (std::size_t t = 0; t < time; ++t) positions[t] = static_cast<double>(t);
    auto [ax, as] = gatr_attention(b, cfg, prefix + ".attn", b.transpose_grid(xn, samples),
                                   b.transpose_grid(sn, samples), positions);
    att = {b.transpose_grid(ax, samples), b.transpose_grid(as, samples)};
  } else {
    att = gatr_attention(b, cfg, prefix + ".attn", xn, sn, {});
  }
  auto x1 = b.add(x, att.first);
  auto s1 = b.add(s, att.second);
  auto [mx, ms] = gatr_mlp(b, cfg, prefix + ".mlp", b.mv_layer_norm(x1), b.layer_norm(s1), ref);
  return {b.add(x1, mx), b.add(s1, ms)};
}

/// The block stack alone; identity when n_blocks == 0.
template <class B>
Streams<B> gatr_trunk(const B& b, const GatrConfig& cfg, typename B::Value x, typename B::Value s,
                      const typename B::Value& ref, std::size_t samples = 0) {
  for (int i = 0; i < cfg.n_blocks; ++i) {
    std::tie(x, s) = gatr_block(b, cfg, i, x, s, ref, samples);
  }
  return {std::move(x), std::move(s)};
}

/// Full network: input projection, `n_blocks` blocks, output projection.
/// Inputs are [outer, items, in_mv, 16] and [outer, items, in_s, 1]; in axial mode
/// `samples` must divide outer.
template <class B>
Streams<B> gatr_forward(const B& b, const GatrConfig& cfg, const Tensor& mv_inputs, const Tensor& scalar_inputs,
                        std::size_t samples = 0) {
  if (cfg.axial && (samples == 0 || mv_inputs.dim(0) % samples != 0)) {
    throw InvalidArgument("gatr_forward: axial mode needs a time axis (outer = samples x time)");
  }
  if (mv_inputs.dim(2) != static_cast<std::size_t>(cfg.in_mv_channels) ||
      scalar_inputs.dim(2) != static_cast<std::size_t>(cfg.in_scalar_channels)) {
    throw ShapeError("gatr_forward: input channel counts do not match the config");
  }
  auto ref = b.input(gatr_reference(mv_inputs, cfg.axial ? samples : 0));
  auto [x, s] = mixed_linear(b, "embed", b.input(mv_inputs), b.input(scalar_inputs));
  auto [y, t] = gatr_trunk(b, cfg, std::move(x), std::move(s), ref, samples);
  return mixed_linear(b, "head", y, t);
}

}  // namespace gatr::model

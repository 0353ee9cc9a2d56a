#include "gatr/model/gatr.hpp"

#include <cmath>
#include <set>

namespace gatr::model {
namespace {

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "n_blocks",       "n_mv_channels",      "n_scalar_channels",   "n_heads",
      "mlp_expansion_mv", "mlp_expansion_scalar", "axial",             "rotary_base",
      "seed",           "in_mv_channels",     "in_scalar_channels",  "out_mv_channels",
      "out_scalar_channels"};
  return keys;
}

}  // namespace

void GatrConfig::validate() const {
  if (n_blocks < 0) throw InvalidArgument("gatr config: n_blocks must be >= 0");
  for (int v : {n_mv_channels, n_scalar_channels, n_heads, mlp_expansion_mv, mlp_expansion_scalar, in_mv_channels,
                in_scalar_channels, out_mv_channels, out_scalar_channels}) {
    if (v < 1) throw InvalidArgument("gatr config: channel counts, heads and expansions must be >= 1");
  }
  if (n_mv_channels % n_heads != 0 || n_scalar_channels % n_heads != 0) {
    throw InvalidArgument("gatr config: channel counts must be divisible by n_heads");
  }
  if (axial && (n_scalar_channels / n_heads) % 2 != 0) {
    throw InvalidArgument("gatr config: rotary embeddings need an even number of scalar channels per head");
  }
  if (!(rotary_base > 0.0)) throw InvalidArgument("gatr config: rotary_base must be positive");
}

void to_json(nlohmann::json& j, const GatrConfig& c) {
  j = {{"n_blocks", c.n_blocks},
       {"n_mv_channels", c.n_mv_channels},
       {"n_scalar_channels", c.n_scalar_channels},
       {"n_heads", c.n_heads},
       {"mlp_expansion_mv", c.mlp_expansion_mv},
       {"mlp_expansion_scalar", c.mlp_expansion_scalar},
       {"axial", c.axial},
       {"rotary_base", c.rotary_base},
       {"seed", c.seed},
       {"in_mv_channels", c.in_mv_channels},
       {"in_scalar_channels", c.in_scalar_channels},
       {"out_mv_channels", c.out_mv_channels},
       {"out_scalar_channels", c.out_scalar_channels}};
}

void from_json(const nlohmann::json& j, GatrConfig& c) {
  if (!j.is_object()) throw InvalidArgument("gatr config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (config_keys().count(key) == 0) throw InvalidArgument("gatr config: unknown key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_blocks", c.n_blocks);
  get("n_mv_channels", c.n_mv_channels);
  get("n_scalar_channels", c.n_scalar_channels);
  get("n_heads", c.n_heads);
  get("mlp_expansion_mv", c.mlp_expansion_mv);
  get("mlp_expansion_scalar", c.mlp_expansion_scalar);
  get("axial", c.axial);
  get("rotary_base", c.rotary_base);
  get("seed", c.seed);
  get("in_mv_channels", c.in_mv_channels);
  get("in_scalar_channels", c.in_scalar_channels);
  get("out_mv_channels", c.out_mv_channels);
  get("out_scalar_channels", c.out_scalar_channels);
}

GatrConfig table3_config() {
  GatrConfig c;
  c.n_blocks = 10;
  c.n_mv_channels = 16;
  c.n_scalar_channels = 128;
  c.n_heads = 8;
  return c;
}

void add_equi_linear(ParameterSet& p, const std::string& prefix, std::size_t in_mv, std::size_t out_mv,
                     std::mt19937_64& rng) {
  Tensor& w = p.add(prefix + ".mv.w", {out_mv, in_mv, nn::kNumLinearBasis, 1});
  for (std::size_t o = 0; o < out_mv; ++o) {
    for (std::size_t c = 0; c < in_mv; ++c) {
      for (int k = 0; k < nn::kNumLinearBasis; ++k) {
        const double var = 1.0 / (static_cast<double>(in_mv) * nn::kLinearBasisOutputs[k]);
        w.at(o, c, k) = std::normal_distribution<double>(0.0, std::sqrt(var))(rng);
      }
    }
  }
  p.add(prefix + ".mv.b", {out_mv, 1, 1, 1});
}

void add_mixed_linear(ParameterSet& p, const std::string& prefix, MixedDims d, std::mt19937_64& rng) {
  add_equi_linear(p, prefix, d.in_mv, d.out_mv, rng);
  fill_normal(p.add(prefix + ".s2mv.w", {d.out_mv, d.in_s, 1, 1}), rng, std::sqrt(1.0 / d.in_s));
  fill_normal(p.add(prefix + ".s.w", {d.out_s, d.in_s, 1, 1}), rng, std::sqrt(1.0 / d.in_s));
  p.add(prefix + ".s.b", {d.out_s, 1, 1, 1});
  fill_normal(p.add(prefix + ".mv2s.w", {d.out_s, d.in_mv, 1, 1}), rng, std::sqrt(1.0 / d.in_mv));
}

ParameterSet init_gatr_params(const GatrConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ParameterSet p;
  const auto mv = static_cast<std::size_t>(cfg.n_mv_channels);
  const auto sc = static_cast<std::size_t>(cfg.n_scalar_channels);
  const auto h = static_cast<std::size_t>(cfg.mlp_expansion_mv) * mv;
  const auto hs = static_cast<std::size_t>(cfg.mlp_expansion_scalar) * sc;
  add_mixed_linear(p, "embed",
                   {static_cast<std::size_t>(cfg.in_mv_channels), static_cast<std::size_t>(cfg.in_scalar_channels), mv,
                    sc},
                   rng);
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const std::string pre = "blocks." + std::to_string(i);
    for (const char* name : {".attn.q", ".attn.k", ".attn.v", ".attn.out"}) {
      add_mixed_linear(p, pre + name, {mv, sc, mv, sc}, rng);
    }
    add_mixed_linear(p, pre + ".mlp.in", {mv, sc, 2 * h, hs}, rng);
    add_equi_linear(p, pre + ".mlp.mid", 2 * h, h, rng);
    add_mixed_linear(p, pre + ".mlp.out", {h, hs, mv, sc}, rng);
  }
  add_mixed_linear(
      p, "head",
      {mv, sc, static_cast<std::size_t>(cfg.out_mv_channels), static_cast<std::size_t>(cfg.out_scalar_channels)}, rng);
  return p;
}

Tensor gatr_reference(const Tensor& mv_inputs, std::size_t samples) {
  if (samples == 0) return nn::reference_multivector(mv_inputs);
  const std::size_t outer = mv_inputs.dim(0);
  if (outer % samples != 0) throw ShapeError("gatr_reference: outer not divisible by samples");
  const std::size_t time = outer / samples;
  const Tensor per_sample = nn::reference_multivector(
      mv_inputs.reshaped({samples, time * mv_inputs.dim(1), mv_inputs.dim(2), mv_inputs.dim(3)}));
  Tensor out({outer, 1, 1, nn::kMvWidth});
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(per_sample.data() + (o / time) * nn::kMvWidth, nn::kMvWidth, out.data() + o * nn::kMvWidth);
  }
  return out;
}

}  // namespace gatr::model

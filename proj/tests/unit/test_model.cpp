#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "gatr/ga/versor.hpp"
#include "gatr/model/baselines.hpp"
#include "gatr/model/gatr.hpp"

using namespace gatr;
using model::Tensor;

namespace {

Tensor normal(std::mt19937_64& rng, Tensor::Shape shape, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(shape);
  for (double& v : t.values()) v = n(rng);
  return t;
}

void zero_prefix(model::ParameterSet& p, const std::string& prefix) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.names()[i].rfind(prefix, 0) == 0) {
      for (double& v : p.arrays()[i].values()) v = 0.0;
    }
  }
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor out(x.shape());
  const std::size_t row = x.dim(2) * x.dim(3);
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    for (std::size_t i = 0; i < x.dim(1); ++i) {
      std::copy_n(x.data() + (o * x.dim(1) + perm[i]) * row, row, out.data() + (o * x.dim(1) + i) * row);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("parameter counts") {
  const model::ParameterSet big = model::init_gatr_params(model::table3_config());
  const double n = static_cast<double>(big.count());
  CHECK(n > 0.75 * 1.9e6);
  CHECK(n < 1.25 * 1.9e6);
  const model::GatrConfig desk;
  CHECK(model::init_gatr_params(desk) == model::init_gatr_params(desk));
  CHECK(model::init_gatr_params(desk).count() == model::init_gatr_params(desk).count());
  model::GatrConfig other = desk;
  other.seed = 1;
  CHECK_FALSE(model::init_gatr_params(desk) == model::init_gatr_params(other));
}

TEST_CASE("config validation and JSON round trip") {
  model::GatrConfig c;
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  nlohmann::json j = model::GatrConfig{};
  model::GatrConfig back = j.get<model::GatrConfig>();
  CHECK(back.n_mv_channels == 8);
  j["nonsense"] = 1;
  CHECK_THROWS_AS(j.get<model::GatrConfig>(), InvalidArgument);
  nlohmann::json t = {{"width", 16}, {"unknown", 2}};
  CHECK_THROWS_AS(t.get<model::TransformerConfig>(), InvalidArgument);
}

TEST_CASE("block with zero output projections is the identity") {
  model::GatrConfig cfg;
  cfg.n_blocks = 1;
  model::ParameterSet p = model::init_gatr_params(cfg);
  zero_prefix(p, "blocks.0.attn.out");
  zero_prefix(p, "blocks.0.mlp.out");
  std::mt19937_64 rng(1);
  const Tensor x = normal(rng, {2, 3, 8, 16}), s = normal(rng, {2, 3, 32, 1});
  const model::PlainBackend<double> b(p);
  const auto [y, ys] = model::gatr_block(b, cfg, 0, x, s, nn::reference_multivector(x));
  CHECK(nn::max_abs_diff(y, x) == 0.0);
  CHECK(nn::max_abs_diff(ys, s) == 0.0);
}

TEST_CASE("empty trunk is the identity and the model is permutation equivariant") {
  model::GatrConfig cfg;
  cfg.n_blocks = 0;
  const model::ParameterSet p = model::init_gatr_params(cfg);
  std::mt19937_64 rng(2);
  const Tensor x = normal(rng, {1, 3, 8, 16}), s = normal(rng, {1, 3, 32, 1});
  const model::PlainBackend<double> b(p);
  const auto [y, ys] = model::gatr_trunk(b, cfg, x, s, nn::reference_multivector(x));
  CHECK(nn::max_abs_diff(y, x) == 0.0);
  CHECK(nn::max_abs_diff(ys, s) == 0.0);

  model::GatrConfig full;
  const model::ParameterSet q = model::init_gatr_params(full);
  const model::PlainBackend<double> fb(q);
  const Tensor mv = normal(rng, {2, 5, 2, 16}), sc = normal(rng, {2, 5, 1, 1});
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const auto [a, as] = model::gatr_forward(fb, full, mv, sc);
  const auto [c, cs] = model::gatr_forward(fb, full, permute(mv, perm), permute(sc, perm));
  CHECK(nn::max_abs_diff(permute(a, perm), c) < 1e-12);
  CHECK(nn::max_abs_diff(permute(as, perm), cs) < 1e-12);
}

TEST_CASE("32-bit block equivariance") {
  model::GatrConfig cfg;
  const model::ParameterSet p = model::init_gatr_params(cfg);
  std::mt19937_64 rng(3);
  const Tensor x = normal(rng, {2, 4, 8, 16}), s = normal(rng, {2, 4, 32, 1});
  const ga::SandwichMatrix m = ga::sandwich_matrix(ga::random_versor(rng, 4, 1.0));
  auto tr = [&](const nn::Tensor<float>& v) {
    nn::Tensor<float> o(v.shape());
    for (std::size_t r = 0; r < v.size(); r += 16) ga::apply_sandwich(m, v.data() + r, o.data() + r);
    return o;
  };
  const model::PlainBackend<float> b(p);
  const auto xf = x.cast<float>(), sf = s.cast<float>();
  const auto ref = nn::reference_multivector(xf);
  const auto [y, ys] = model::gatr_block(b, cfg, 0, xf, sf, ref);
  const auto [yt, yst] = model::gatr_block(b, cfg, 0, tr(xf), sf, tr(ref));
  CHECK(nn::max_abs_diff(tr(y), yt) / nn::max_abs(y) < 1e-6);
  CHECK(nn::max_abs_diff(ys, yst) / nn::max_abs(ys) < 1e-6);
}

TEST_CASE("axial mode with one time step matches non-axial when time attention is switched off") {
  model::GatrConfig cfg;
  cfg.n_blocks = 2;
  model::GatrConfig axial = cfg;
  axial.axial = true;
  model::ParameterSet p = model::init_gatr_params(cfg);
  zero_prefix(p, "blocks.1.attn.out");
  std::mt19937_64 rng(4);
  const Tensor mv = normal(rng, {2, 4, 2, 16}), s = normal(rng, {2, 4, 1, 1});
  const model::PlainBackend<double> b(p);
  const auto [y, ys] = model::gatr_forward(b, cfg, mv, s);
  const auto [ya, yas] = model::gatr_forward(b, axial, mv, s, 2);
  CHECK(nn::max_abs_diff(y, ya) < 1e-12);
  CHECK(nn::max_abs_diff(ys, yas) < 1e-12);
  CHECK_THROWS_AS(model::gatr_forward(b, axial, mv, s), InvalidArgument);
}

TEST_CASE("input scales from 1e-3 to 1e3 stay finite") {
  const model::GatrConfig cfg;
  const model::ParameterSet p = model::init_gatr_params(cfg);
  std::mt19937_64 rng(5);
  const Tensor mv = normal(rng, {1, 4, 2, 16}), s = normal(rng, {1, 4, 1, 1});
  const model::PlainBackend<double> b(p);
  for (double scale = 1e-3; scale <= 1e3 * 1.0001; scale *= 10.0) {
    Tensor m = mv;
    for (double& v : m.values()) v *= scale;
    const auto [y, ys] = model::gatr_forward(b, cfg, m, s);
    CHECK(nn::all_finite(y));
    CHECK(nn::all_finite(ys));
  }
}

TEST_CASE("checkpoint round trip") {
  const model::GatrConfig cfg;
  const model::ParameterSet p = model::init_gatr_params(cfg);
  const std::string path = (std::filesystem::temp_directory_path() / "gatr_unit_ckpt.bin").string();
  model::save_checkpoint(path, nlohmann::json(cfg), p);
  const model::Checkpoint ck = model::load_checkpoint(path);
  CHECK(ck.params == p);
  CHECK(ck.config.get<model::GatrConfig>().n_blocks == cfg.n_blocks);
  std::remove(path.c_str());
  CHECK_THROWS_AS(model::load_checkpoint(path), IoError);
}

TEST_CASE("baselines") {
  const model::TransformerConfig tc;
  const model::ParameterSet tp = model::init_transformer_params(tc);
  std::mt19937_64 rng(6);
  const Tensor f = normal(rng, {2, 4, 7, 1});
  const model::PlainBackend<double> tb(tp);
  const Tensor y = model::transformer_forward(tb, tc, f);
  CHECK(y.shape() == Tensor::Shape{2, 4, 3, 1});
  const std::vector<std::size_t> perm{2, 3, 1, 0};
  CHECK(nn::max_abs_diff(model::transformer_forward(tb, tc, permute(f, perm)), permute(y, perm)) < 1e-12);

  const model::MlpConfig mc;
  const model::ParameterSet mp = model::init_mlp_params(mc);
  const model::PlainBackend<double> mb(mp);
  CHECK(model::mlp_forward(mb, mc, f).size() == 2 * 4 * 3);
  CHECK_THROWS_AS(model::mlp_forward(mb, mc, normal(rng, {1, 5, 7, 1})), ShapeError);
}

#include <doctest.h>

#include <numeric>
#include <random>

#include "gatr/ga/versor.hpp"
#include "gatr/nn/primitives.hpp"

using namespace gatr;
using nn::Tensor;
using ga::Multivector;
namespace b = ga::blade;

namespace {

Tensor<double> normal(std::mt19937_64& rng, Tensor<double>::Shape shape) {
  std::normal_distribution<double> n;
  Tensor<double> t(shape);
  for (double& v : t.values()) v = n(rng);
  return t;
}

Tensor<double> one_mv(const Multivector& m) {
  Tensor<double> t({1, 1, 1, 16});
  for (int i = 0; i < 16; ++i) t[i] = m[i];
  return t;
}

Multivector at(const Tensor<double>& t, std::size_t o, std::size_t i, std::size_t c) {
  Multivector m;
  for (int k = 0; k < 16; ++k) m[k] = t.at(o, i, c, k);
  return m;
}

}  // namespace

TEST_CASE("linear basis maps") {
  const Multivector x = Multivector::scalar(1.0) + Multivector::basis(b::e1);
  CHECK(nn::linear_basis_map(0, x) == Multivector::scalar(1.0));
  CHECK(nn::linear_basis_map(5, Multivector::scalar(1.0)) == Multivector::basis(b::e0));
  CHECK_THROWS_AS(nn::linear_basis_map(9, x), InvalidArgument);
}

TEST_CASE("equi_linear: one-hot grade-1 weight and bias-only output") {
  std::mt19937_64 rng(1);
  const Tensor<double> x = normal(rng, {2, 3, 1, 16});
  Tensor<double> w({1, 1, 9, 1});
  w[1] = 1.0;
  const Tensor<double> y = nn::equi_linear(x, w);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 3; ++i) CHECK(at(y, o, i, 0) == ga::grade_projection(at(x, o, i, 0), 1));
  }
  const Tensor<double> zero({1, 1, 9, 1});
  Tensor<double> bias({1, 1, 1, 1});
  bias[0] = 2.5;
  const Tensor<double> c = nn::equi_linear(x, zero, bias);
  CHECK(at(c, 1, 2, 0) == Multivector::scalar(2.5));
}

TEST_CASE("geometric_bilinear: identity partner and vanishing reference") {
  std::mt19937_64 rng(2);
  const Tensor<double> x = normal(rng, {1, 2, 2, 16});
  Tensor<double> one({1, 2, 2, 16});
  for (std::size_t r = 0; r < one.size(); r += 16) one[r] = 1.0;
  Tensor<double> ref = normal(rng, {1, 1, 1, 16});
  ref[b::e0123] = 0.0;
  const Tensor<double> out = nn::geometric_bilinear(x, one, ref);
  REQUIRE(out.dim(2) == 4);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(at(out, 0, i, c) == at(x, 0, i, c));
      CHECK(at(out, 0, i, c + 2) == Multivector());
    }
  }
}

TEST_CASE("gated_gelu") {
  Multivector m = Multivector::basis(b::e12, 3.0);
  CHECK(at(nn::gated_gelu(one_mv(m)), 0, 0, 0) == Multivector());
  m[b::k1] = 40.0;
  const Multivector y = at(nn::gated_gelu(one_mv(m)), 0, 0, 0);
  CHECK(y[b::e12] == doctest::Approx(120.0));
  CHECK(nn::gelu(0.0) == 0.0);
  CHECK(nn::gelu(1.0) == doctest::Approx(0.8413447460685429));
}

TEST_CASE("mv_layer_norm") {
  const Multivector x = Multivector::basis(b::e1, 2.0);
  CHECK(at(nn::mv_layer_norm(one_mv(x), 0.0), 0, 0, 0) == Multivector::basis(b::e1, 1.0));
  const Multivector ideal = Multivector::basis(b::e01, 3.0);
  const Multivector y = at(nn::mv_layer_norm(one_mv(ideal), 1e-6), 0, 0, 0);
  CHECK(y[b::e01] == doctest::Approx(3.0 / std::sqrt(1e-6)));
}

TEST_CASE("mv_attention: single source and uniform weights") {
  std::mt19937_64 rng(3);
  const Tensor<double> q = normal(rng, {1, 2, 1, 16});
  const Tensor<double> v1 = normal(rng, {1, 1, 1, 16});
  const Tensor<double> k1 = normal(rng, {1, 1, 1, 16});
  const Tensor<double> s0({1, 2, 0, 1}), s1({1, 1, 0, 1});
  const auto single = nn::mv_attention(q, k1, v1, s0, s1, s1);
  CHECK(at(single.mv, 0, 1, 0) == at(v1, 0, 0, 0));

  // Keys with only ideal components are orthogonal to every query.
  Tensor<double> k({1, 3, 1, 16});
  for (std::size_t i = 0; i < 3; ++i) k.at(0, i, 0, b::e01 + i) = 1.0;
  const Tensor<double> v = normal(rng, {1, 3, 1, 16});
  const Tensor<double> s3({1, 3, 0, 1});
  const auto uniform = nn::mv_attention(q, k, v, s0, s3, s3);
  const Multivector mean = (at(v, 0, 0, 0) + at(v, 0, 1, 0) + at(v, 0, 2, 0)) / 3.0;
  CHECK(ga::max_abs(at(uniform.mv, 0, 0, 0) - mean) < 1e-15);
}

TEST_CASE("softmax rows sum to one even for extreme logits") {
  std::mt19937_64 rng(4);
  Tensor<double> l = normal(rng, {2, 2, 3, 6});
  for (double& v : l.values()) v *= 500.0;
  const Tensor<double> w = nn::softmax(l);
  for (std::size_t r = 0; r < w.size(); r += 6) {
    CHECK(std::abs(std::accumulate(w.data() + r, w.data() + r + 6, 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("rotary embeddings") {
  std::mt19937_64 rng(5);
  const Tensor<double> s = normal(rng, {1, 3, 4, 1});
  const std::vector<double> zeros(3, 0.0);
  CHECK(nn::max_abs_diff(nn::rotary_embed(s, zeros, 1e4), s) == 0.0);

  // q_i . k_j depends only on i - j.
  const Tensor<double> q = normal(rng, {1, 1, 4, 1});
  const Tensor<double> k = normal(rng, {1, 1, 4, 1});
  auto dot_at = [&](double i, double j) {
    const std::vector<double> pi{i}, pj{j};
    const Tensor<double> a = nn::rotary_embed(q, pi, 10.0), c = nn::rotary_embed(k, pj, 10.0);
    double d = 0.0;
    for (std::size_t x = 0; x < 4; ++x) d += a[x] * c[x];
    return d;
  };
  CHECK(dot_at(5.0, 2.0) == doctest::Approx(dot_at(13.0, 10.0)).epsilon(1e-12));

  // A common shift of all positions leaves attention weights unchanged.
  const Tensor<double> qs = normal(rng, {1, 4, 4, 1}), ks = normal(rng, {1, 4, 4, 1});
  const Tensor<double> none({1, 4, 0, 16});
  const std::vector<double> pos{0, 1, 2, 3}, shifted{7, 8, 9, 10};
  const Tensor<double> w0 = nn::softmax(nn::attention_logits(none, none, nn::rotary_embed(qs, pos, 10.0, 2),
                                                             nn::rotary_embed(ks, pos, 10.0, 2), 2));
  const Tensor<double> w1 = nn::softmax(nn::attention_logits(none, none, nn::rotary_embed(qs, shifted, 10.0, 2),
                                                             nn::rotary_embed(ks, shifted, 10.0, 2), 2));
  CHECK(nn::max_abs_diff(w0, w1) < 1e-12);
  CHECK_THROWS_AS(nn::rotary_embed(normal(rng, {1, 3, 3, 1}), zeros, 10.0), InvalidArgument);
}

TEST_CASE("equivariance of the primitives under one versor") {
  std::mt19937_64 rng(6);
  const ga::Versor u = ga::random_versor(rng, 3, 1.0);
  const ga::SandwichMatrix m = ga::sandwich_matrix(u);
  auto tr = [&](const Tensor<double>& x) {
    Tensor<double> o(x.shape());
    for (std::size_t r = 0; r < x.size(); r += 16) ga::apply_sandwich(m, x.data() + r, o.data() + r);
    return o;
  };
  const Tensor<double> x = normal(rng, {2, 3, 2, 16}), y = normal(rng, {2, 3, 2, 16});
  const Tensor<double> w = normal(rng, {3, 2, 9, 1}), bias = normal(rng, {3, 1, 1, 1});
  const Tensor<double> ref = nn::reference_multivector(x);
  CHECK(nn::max_abs_diff(tr(nn::equi_linear(x, w, bias)), nn::equi_linear(tr(x), w, bias)) < 1e-12);
  CHECK(nn::max_abs_diff(tr(nn::geometric_bilinear(x, y, ref)), nn::geometric_bilinear(tr(x), tr(y), tr(ref))) < 1e-11);
  CHECK(nn::max_abs_diff(tr(nn::gated_gelu(x)), nn::gated_gelu(tr(x))) < 1e-12);
  CHECK(nn::max_abs_diff(tr(nn::mv_layer_norm(x)), nn::mv_layer_norm(tr(x))) < 1e-12);
  const Tensor<double> s({2, 3, 0, 1});
  CHECK(nn::max_abs_diff(nn::attention_logits(x, y, s, s, 2), nn::attention_logits(tr(x), tr(y), s, s, 2)) < 1e-12);
}

TEST_CASE("shape errors") {
  const Tensor<double> x({1, 2, 3, 16});
  CHECK_THROWS_AS(nn::equi_linear(x, Tensor<double>({2, 2, 9, 1})), ShapeError);
  CHECK_THROWS_AS(nn::geometric_product(x, Tensor<double>({1, 2, 2, 16})), ShapeError);
}

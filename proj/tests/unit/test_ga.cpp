#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "gatr/ga/cayley.hpp"
#include "gatr/ga/embedding.hpp"
#include "gatr/ga/versor.hpp"
#include "oracle.hpp"

using namespace gatr;
using ga::Multivector;
namespace b = ga::blade;

namespace {

Multivector random_mv(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Multivector m;
  for (double& c : m.coeffs) c = n(rng);
  return m;
}

oracle::Dense dense(const Multivector& m) {
  oracle::Dense d{};
  for (int i = 0; i < 16; ++i) d[i] = m[i];
  return d;
}

double diff(const Multivector& m, const oracle::Dense& d) {
  double e = 0.0;
  for (int i = 0; i < 16; ++i) e = std::max(e, std::abs(m[i] - d[i]));
  return e;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing golden file " << path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("blade order and grades match the reference enumeration") {
  const auto order = oracle::blade_order(4);
  const ga::CliffordTables& t = ga::pga_tables();
  REQUIRE(order.size() == 16);
  for (int i = 0; i < 16; ++i) {
    CHECK(t.grade(i) == static_cast<int>(order[i].size()));
    CHECK(ga::kBladeGrade[i] == static_cast<int>(order[i].size()));
    std::uint32_t mask = 0;
    for (int v : order[i]) mask |= 1u << v;
    CHECK(t.bitmask(i) == mask);
  }
}

TEST_CASE("geometric and wedge tables agree with the index-list oracle") {
  const auto order = oracle::blade_order(4);
  const ga::CliffordTables& t = ga::pga_tables();
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const oracle::Product p = oracle::multiply(order[i], order[j], oracle::pga_metric());
      const ga::BladeProduct g = t.geometric(i, j);
      CHECK(g.sign == static_cast<int>(p.sign));
      if (p.sign != 0) CHECK(g.index == oracle::index_of(order, p.blade));
      const ga::BladeProduct w = t.wedge(i, j);
      const bool disjoint = p.blade.size() == order[i].size() + order[j].size();
      CHECK(w.sign == (disjoint ? static_cast<int>(p.sign) : 0));
    }
  }
}

TEST_CASE("table examples") {
  const ga::CliffordTables& t = ga::pga_tables();
  CHECK(t.geometric(b::e1, b::e1) == ga::BladeProduct{b::k1, 1});
  CHECK(t.geometric(b::e0, b::e0).sign == 0);
  CHECK(t.geometric(b::e1, b::e2) == ga::BladeProduct{b::e12, 1});
  CHECK(t.geometric(b::e2, b::e1) == ga::BladeProduct{b::e12, -1});
}

TEST_CASE("dense products match the oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Multivector x = random_mv(rng), y = random_mv(rng);
    CHECK(diff(x * y, oracle::geometric(dense(x), dense(y))) < 1e-12);
    CHECK(diff(ga::wedge(x, y), oracle::wedge(dense(x), dense(y))) < 1e-12);
    CHECK(ga::inner(x, y) == doctest::Approx(oracle::inner(dense(x), dense(y))).epsilon(1e-12));
  }
}

TEST_CASE("geometric product examples") {
  const Multivector v = Multivector::basis(b::e1) + Multivector::basis(b::e2);
  CHECK(v * v == Multivector::scalar(2.0));
  CHECK(Multivector::basis(b::e1) * Multivector::basis(b::e23) == Multivector::basis(b::e123));
  std::mt19937_64 rng(1);
  const Multivector x = random_mv(rng);
  CHECK(x * Multivector::scalar(1.0) == x);
}

TEST_CASE("wedge and inner examples") {
  CHECK(ga::wedge(Multivector::basis(b::e1), Multivector::basis(b::e2)) == Multivector::basis(b::e12));
  CHECK(ga::wedge(Multivector::basis(b::e1), Multivector::basis(b::e1)) == Multivector());
  CHECK(ga::inner(Multivector::basis(b::e0), Multivector::basis(b::e0)) == 0.0);
  const Multivector x = Multivector::basis(b::e1) + Multivector::basis(b::e12, 2.0);
  CHECK(ga::inner(x, x) == doctest::Approx(5.0));
}

TEST_CASE("involutions and projections") {
  CHECK(ga::reverse(Multivector::basis(b::e12)) == -Multivector::basis(b::e12));
  CHECK(ga::grade_involution(Multivector::basis(b::e123)) == -Multivector::basis(b::e123));
  const Multivector x = Multivector::scalar(1.0) + Multivector::basis(b::e1) + Multivector::basis(b::e12);
  CHECK(ga::grade_projection(x, 1) == Multivector::basis(b::e1));
  CHECK_THROWS_AS(ga::grade_projection(x, 5), InvalidArgument);
}

TEST_CASE("dual and join") {
  CHECK(ga::dual(Multivector::basis(b::e01)) == Multivector::basis(b::e23));
  CHECK(ga::dual(Multivector::scalar(1.0)) == Multivector::basis(b::e0123));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Multivector x = random_mv(rng);
    CHECK(ga::max_abs(ga::dual_inverse(ga::dual(x)) - x) < 1e-15);
    CHECK(ga::max_abs(ga::join(Multivector::basis(b::e0123), x) - x) < 1e-15);
  }
  const Multivector d = ga::dual_inverse(Multivector::basis(b::e1));
  CHECK(ga::join(d, d) == Multivector());
  for (int trial = 0; trial < 20; ++trial) {
    std::normal_distribution<double> n(0.0, 3.0);
    const ga::Vec3 p{n(rng), n(rng), n(rng)}, q{n(rng), n(rng), n(rng)};
    const double dist = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                                  (p[2] - q[2]) * (p[2] - q[2]));
    CHECK(ga::norm(ga::join(ga::embed_point(p), ga::embed_point(q))) == doctest::Approx(dist).epsilon(1e-12));
  }
}

TEST_CASE("equi_join scaling") {
  std::mt19937_64 rng(4);
  const Multivector x = random_mv(rng), y = random_mv(rng);
  Multivector z = random_mv(rng);
  z[b::e0123] = 0.0;
  CHECK(ga::equi_join(x, y, z) == Multivector());
  z[b::e0123] = 1.0;
  CHECK(ga::equi_join(x, y, z) == ga::join(x, y));
}

TEST_CASE("sandwich and embeddings") {
  std::mt19937_64 rng(5);
  const Multivector x = random_mv(rng);
  CHECK(ga::sandwich(ga::Versor{}, x) == x);
  CHECK(ga::embed_point({0, 0, 0}) == Multivector::basis(b::e123));
  CHECK(ga::embed_translation({0, 0, 0}).mv == Multivector::scalar(1.0));
  const ga::Vec3 p{1.5, -2.0, 0.25}, t{3.0, 1.0, -4.0};
  const ga::Vec3 moved = ga::extract_point(ga::sandwich(ga::embed_translation(t), ga::embed_point(p)));
  for (int i = 0; i < 3; ++i) CHECK(moved[i] == doctest::Approx(p[i] + t[i]));
  const ga::Vec3 back = ga::extract_point(ga::embed_point(p));
  for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(p[i]));
  const ga::Versor u = ga::random_versor(rng, 3, 1.0);
  CHECK(u.parity == ga::Parity::odd);
  CHECK(ga::max_abs(ga::sandwich(ga::inverse(u), ga::sandwich(u, x)) - x) < 1e-12);
  CHECK(ga::inner(u.mv, u.mv) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ga::extract_point(Multivector::basis(b::e023)), NumericError);
  CHECK_THROWS_AS(ga::embed_plane({0, 0, 0}, 1.0), InvalidArgument);
}

TEST_CASE("two mirrors: identical planes give the identity, parallel planes a translation") {
  const ga::Versor r1 = ga::embed_reflection({0, 0, 1}, 0.5);
  const ga::Versor same = ga::compose(r1, r1);
  const Multivector pt = ga::embed_point({0.3, -0.7, 2.0});
  CHECK(ga::max_abs(ga::sandwich(same, pt) - pt) < 1e-14);
  const double delta = 0.75;
  const ga::Versor r2 = ga::embed_reflection({0, 0, 1}, 0.5 + delta);
  const ga::Vec3 q = ga::extract_point(ga::sandwich(ga::compose(r2, r1), pt));
  CHECK(q[0] == doctest::Approx(0.3));
  CHECK(q[1] == doctest::Approx(-0.7));
  CHECK(std::abs(std::abs(q[2] - 2.0) - 2.0 * delta) < 1e-12);
}

TEST_CASE("golden tables") {
  const ga::CliffordTables& t = ga::pga_tables();
  std::ostringstream g, w, d, e;
  t.write_geometric(g);
  t.write_wedge(w);
  t.write_dual(d);
  ga::write_embedding_signs(e);
  CHECK(g.str() == slurp(GATR_GOLDEN_DIR "/cayley_geometric.txt"));
  CHECK(w.str() == slurp(GATR_GOLDEN_DIR "/cayley_wedge.txt"));
  CHECK(d.str() == slurp(GATR_GOLDEN_DIR "/dual_signs.txt"));
  CHECK(e.str() == slurp(GATR_GOLDEN_DIR "/embedding_signs.txt"));
}

#include <chrono>

#include "gatr/ga/embedding.hpp"
#include "verify_common.hpp"

namespace gatr::verify {
namespace {

using ga::Multivector;
using detail::random_mv;
using detail::rel_err;

Multivector random_vector(std::mt19937_64& rng) {
  Multivector v;
  std::normal_distribution<double> n;
  for (int b = ga::blade::e0; b <= ga::blade::e3; ++b) v[b] = n(rng);
  return v;
}

Multivector random_product(std::mt19937_64& rng, int factors) {
  Multivector x = Multivector::scalar(1.0);
  for (int i = 0; i < factors; ++i) x = x * random_vector(rng);
  return x;
}

Multivector homogeneous(const Multivector& x, int grade) { return ga::grade_projection(x, grade); }

// Euclidean part and ideal part (x = t + e0 p).
void decompose(const Multivector& x, Multivector& t, Multivector& p) {
  const ga::CliffordTables& tab = ga::pga_tables();
  t = Multivector();
  p = Multivector();
  for (int b = 0; b < ga::kNumBlades; ++b) {
    if (tab.bitmask(b) & 1u) {
      p[tab.blade_of_mask(tab.bitmask(b) & ~1u)] = x[b];
    } else {
      t[b] = x[b];
    }
  }
}

// Join inside the Euclidean subalgebra: ((a e123~) ^ (b e123~)) e123.
Multivector euclidean_join(const Multivector& a, const Multivector& b) {
  const Multivector e = Multivector::basis(ga::blade::e123);
  const Multivector er = ga::reverse(e);
  return ga::wedge(a * er, b * er) * e;
}

Multivector join_by_decomposition(const Multivector& x, const Multivector& y) {
  const Multivector e0 = Multivector::basis(ga::blade::e0);
  Multivector out;
  for (int k = 0; k <= ga::kMaxGrade; ++k) {
    Multivector tx, px;
    decompose(homogeneous(x, k), tx, px);
    for (int l = 0; l <= ga::kMaxGrade; ++l) {
      Multivector ty, py;
      decompose(homogeneous(y, l), ty, py);
      Multivector term = euclidean_join(tx, py) - euclidean_join(ga::grade_involution(px), ty) +
                         e0 * euclidean_join(px, py);
      out += (k * l) % 2 == 0 ? term : -term;
    }
  }
  return out;
}

Multivector euclidean_only(const Multivector& x) {
  Multivector r;
  for (int b = 0; b < ga::kNumBlades; ++b) {
    if (ga::kEuclideanBlade[b]) r[b] = x[b];
  }
  return r;
}

ga::Vec3 random_vec3(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

double dist(const ga::Vec3& a, const ga::Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

double vec_rel(const ga::Vec3& a, const ga::Vec3& b) {
  const double s = std::max({1e-300, std::abs(a[0]), std::abs(a[1]), std::abs(a[2]), std::abs(b[0]), std::abs(b[1]),
                             std::abs(b[2])});
  return dist(a, b) / s;
}

}  // namespace

SuiteReport run_algebra_suite(const VerifyOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report;
  report.suite = "algebra";
  detail::Tracker t(report, opt);
  const ga::CliffordTables& tab = ga::pga_tables();
  const int trials = opt.trials > 0 ? opt.trials : 1000;
  std::mt19937_64 rng(opt.seed);

  // Exact table checks, counted as mismatches.
  double assoc = 0.0;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      for (int k = 0; k < 16; ++k) {
        const ga::BladeProduct ij = tab.geometric(i, j);
        const ga::BladeProduct jk = tab.geometric(j, k);
        const ga::BladeProduct l = tab.geometric(ij.index, k);
        const ga::BladeProduct r = tab.geometric(i, jk.index);
        const int ls = ij.sign * l.sign;
        const int rs = jk.sign * r.sign;
        if (ls != rs || (ls != 0 && l.index != r.index)) assoc += 1.0;
      }
    }
  }
  t.record("associativity (16^3 basis triples, mismatches)", assoc, 0.0);

  double table = 0.0;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const bool share_e0 = (tab.bitmask(i) & tab.bitmask(j) & 1u) != 0;
      const bool share_any = (tab.bitmask(i) & tab.bitmask(j)) != 0;
      if ((tab.geometric(i, j).sign == 0) != share_e0) table += 1.0;
      if (share_any && tab.wedge(i, j).sign != 0) table += 1.0;
    }
  }
  t.record("table invariants (mismatches)", table, 0.0);

  const Multivector e0 = Multivector::basis(ga::blade::e0);
  for (int trial = 0; trial < trials; ++trial) {
    const Multivector x = random_mv(rng);
    const Multivector y = random_mv(rng);
    const ga::Versor u = ga::random_versor(rng, 1 + trial % 4, 1.0);

    const Multivector v = random_vector(rng);
    t.record("fundamental relation v v = <v,v>", rel_err(v * v, Multivector::scalar(ga::inner(v, v))), 1e-12);

    const Multivector a = random_product(rng, 1 + trial % 4);
    const Multivector b = random_product(rng, 1 + (trial / 4) % 4);
    const double na = ga::norm(a), nb = ga::norm(b);
    t.record("norm multiplicativity on versors", std::abs(ga::norm(a * b) - na * nb) / (na * nb), 1e-10);

    t.record("action homomorphism (geometric product)",
             rel_err(ga::sandwich(u, x * y), ga::sandwich(u, x) * ga::sandwich(u, y)), 1e-10);
    t.record("action homomorphism (wedge)",
             rel_err(ga::sandwich(u, ga::wedge(x, y)), ga::wedge(ga::sandwich(u, x), ga::sandwich(u, y))), 1e-10);
    t.record("sandwich inverse", rel_err(ga::sandwich(ga::inverse(u), ga::sandwich(u, x)), x), 1e-10);
    for (int k = 0; k <= ga::kMaxGrade; ++k) {
      t.record("grade projection equivariance",
               rel_err(ga::sandwich(u, ga::grade_projection(x, k)), ga::grade_projection(ga::sandwich(u, x), k)),
               1e-10);
    }
    t.record("e0 multiplication equivariance", rel_err(ga::sandwich(u, e0 * x), e0 * ga::sandwich(u, x)), 1e-10);
    t.record("dual bijectivity", std::max(rel_err(ga::dual_inverse(ga::dual(x)), x), rel_err(ga::dual(ga::dual_inverse(x)), x)),
             1e-10);
    t.record("join decomposition cross-check", rel_err(ga::join(x, y), join_by_decomposition(x, y)), 1e-12);

    const Multivector ve = euclidean_only(random_vector(rng));
    const Multivector xe = euclidean_only(x), ye = euclidean_only(y);
    t.record("contraction identity v _| (x v y) = (v _| x) v y",
             rel_err(ga::left_contraction(ve, euclidean_join(xe, ye)), euclidean_join(ga::left_contraction(ve, xe), ye)),
             1e-10);

    const ga::Versor even = ga::random_versor(rng, 2 * (1 + trial % 2), 1.0);
    t.record("join equivariance (even versors)",
             rel_err(ga::sandwich(even, ga::join(x, y)), ga::join(ga::sandwich(even, x), ga::sandwich(even, y))), 1e-10);
    const Multivector z = random_mv(rng);
    t.record("equi_join equivariance (all versors)",
             rel_err(ga::sandwich(u, ga::equi_join(x, y, z)),
                     ga::equi_join(ga::sandwich(u, x), ga::sandwich(u, y), ga::sandwich(u, z))),
             1e-10);

    // Invariant / anti-invariant blades of a unit plane.
    const ga::Vec3 n = random_vec3(rng, 1.0);
    const ga::Versor plane = ga::embed_reflection(n, std::normal_distribution<double>()(rng));
    auto orth = [&]() {
      Multivector w = euclidean_only(random_vector(rng));
      const double k = (w[2] * n[0] + w[3] * n[1] + w[4] * n[2]) / (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      for (int c = 0; c < 3; ++c) w[2 + c] -= k * n[c];
      w[ga::blade::e0] = std::normal_distribution<double>()(rng);
      return w;
    };
    const Multivector tangential = ga::wedge(orth(), orth());
    const Multivector containing = ga::wedge(plane.mv, random_vector(rng));
    t.record("invariant blade (u _| x = 0)",
             std::max(ga::max_abs(ga::left_contraction(plane.mv, tangential)) / ga::max_abs(tangential),
                      rel_err(ga::sandwich(plane, tangential), tangential)),
             1e-10);
    t.record("anti-invariant blade (u ^ x = 0)",
             std::max(ga::max_abs(ga::wedge(plane.mv, containing)) / ga::max_abs(containing),
                      rel_err(ga::sandwich(plane, containing), -containing)),
             1e-10);

    // Embedded points: distances via the join, not via the geometric product.
    const ga::Vec3 p1 = random_vec3(rng, 5.0), p2 = random_vec3(rng, 5.0);
    const Multivector P1 = ga::embed_point(p1), P2 = ga::embed_point(p2);
    const Multivector line = ga::join(P1, P2);
    const double d = dist(p1, p2);
    t.record("join of points has norm |p1 - p2|", std::abs(ga::norm(line) - d) / d, 1e-12);
    t.record("expressivity witness <P1 v P2, P1 v P2> = |p1 - p2|^2", std::abs(ga::inner(line, line) - d * d) / (d * d),
             1e-12);
    const Multivector gp = P1 * P2;
    t.record("geometric product of points blind to distance", std::abs(ga::inner(gp, gp) - 1.0), 1e-12);

    // Embedding dictionary against the affine maps of R^3.
    const ga::Vec3 tr = random_vec3(rng, 3.0);
    t.record("translation moves points",
             vec_rel(ga::extract_point(ga::sandwich(ga::embed_translation(tr), P1)),
                     {p1[0] + tr[0], p1[1] + tr[1], p1[2] + tr[2]}),
             1e-12);
    ga::Quaternion q{std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                     std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)};
    const double qn = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    q = {q.w / qn, q.x / qn, q.y / qn, q.z / qn};
    const auto rm = ga::rotation_matrix(q);
    ga::Vec3 rp{};
    for (int r = 0; r < 3; ++r) rp[r] = rm[r][0] * p1[0] + rm[r][1] * p1[1] + rm[r][2] * p1[2];
    t.record("rotation rotates points", vec_rel(ga::extract_point(ga::sandwich(ga::embed_rotation(q), P1)), rp), 1e-12);
    t.record("point reflection maps p to 2c - p",
             vec_rel(ga::extract_point(ga::sandwich(ga::embed_point_reflection(p2), P1)),
                     {2 * p2[0] - p1[0], 2 * p2[1] - p1[1], 2 * p2[2] - p1[2]}),
             1e-12);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gatr::verify

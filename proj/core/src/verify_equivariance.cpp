#include <Eigen/Dense>
#include <chrono>
#include <numeric>

#include "gatr/ga/cayley.hpp"
#include "gatr/ga/embedding.hpp"
#include "gatr/model/gatr.hpp"
#include "verify_common.hpp"

namespace gatr::verify {
namespace {

using detail::rel_err;
using nn::Tensor;

template <class T>
Tensor<T> transform(const ga::SandwichMatrix& m, const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); i += nn::kMvWidth) ga::apply_sandwich(m, x.data() + i, out.data() + i);
  return out;
}

Tensor<double> random_tensor(std::mt19937_64& rng, Tensor<double>::Shape shape, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor<double> t(shape);
  for (double& v : t.values()) v = n(rng);
  return t;
}

// Items permuted along axis 1.
template <class T>
Tensor<T> permute_items(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  Tensor<T> out(x.shape());
  const std::size_t row = x.dim(2) * x.dim(3);
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    for (std::size_t i = 0; i < x.dim(1); ++i) {
      std::copy_n(x.data() + (o * x.dim(1) + perm[i]) * row, row, out.data() + (o * x.dim(1) + i) * row);
    }
  }
  return out;
}

std::vector<ga::Versor> versor_set(std::mt19937_64& rng, int n) {
  static constexpr double kScales[] = {0.0, 1.0, 10.0};
  std::vector<ga::Versor> vs;
  for (int i = 0; i < n; ++i) vs.push_back(ga::random_versor(rng, 1 + i % 4, kScales[i % 3]));
  vs.push_back(ga::embed_translation({3.0, -7.0, 11.0}));
  vs.push_back(ga::embed_rotation({0.3, -0.5, 0.7, 0.2}));
  vs.push_back(ga::embed_point_reflection({1.5, 2.0, -4.0}));
  return vs;
}

// Runs every layer-level check at one precision.
template <class T>
struct LayerChecks {
  const model::GatrConfig& cfg;
  const model::ParameterSet& params;
  model::PlainBackend<T> b;
  Tensor<double> mv, s, ref, w9, bias, q, k, v, qs, ks, vs;
  std::size_t samples = 0;

  LayerChecks(const model::GatrConfig& c, const model::ParameterSet& p, std::mt19937_64& rng)
      : cfg(c), params(p), b(p) {
    mv = random_tensor(rng, {2, 5, 2, 16});
    s = random_tensor(rng, {2, 5, 1, 1});
    ref = model::gatr_reference(mv);
    w9 = random_tensor(rng, {3, 2, 9, 1});
    bias = random_tensor(rng, {3, 1, 1, 1});
    q = random_tensor(rng, {2, 5, 4, 16});
    k = random_tensor(rng, {2, 5, 4, 16});
    v = random_tensor(rng, {2, 5, 4, 16});
    qs = random_tensor(rng, {2, 5, 6, 1});
    ks = random_tensor(rng, {2, 5, 6, 1});
    vs = random_tensor(rng, {2, 5, 6, 1});
  }

  Tensor<T> c(const Tensor<double>& x) const { return x.template cast<T>(); }

  void run(detail::Tracker& t, const ga::SandwichMatrix& m, const std::string& tag, double tol) const {
    const Tensor<double> mv_t = transform(m, mv);
    const Tensor<T> x = c(mv), xt = c(mv_t);
    const Tensor<T> xm = c(transform(m, q));
    auto check = [&](const std::string& name, const Tensor<T>& expect, const Tensor<T>& got) {
      t.record(name + " " + tag, rel_err(expect, got), tol);
    };

    check("equi_linear", transform(m, nn::equi_linear(x, c(w9), c(bias))), nn::equi_linear(xt, c(w9), c(bias)));
    check("geometric_product", transform(m, nn::geometric_product(c(q), c(k))),
          nn::geometric_product(xm, c(transform(m, k))));
    const Tensor<double> r4 = nn::reference_multivector(q);
    check("equi_join", transform(m, nn::equi_join(c(q), c(k), c(r4))),
          nn::equi_join(xm, c(transform(m, k)), c(transform(m, r4))));
    check("gated_gelu", transform(m, nn::gated_gelu(c(q))), nn::gated_gelu(xm));
    check("mv_layer_norm", transform(m, nn::mv_layer_norm(c(q))), nn::mv_layer_norm(xm));

    const auto a = nn::mv_attention(c(q), c(k), c(v), c(qs), c(ks), c(vs), 2);
    const auto at = nn::mv_attention(xm, c(transform(m, k)), c(transform(m, v)), c(qs), c(ks), c(vs), 2);
    check("mv_attention output", transform(m, a.mv), at.mv);
    check("mv_attention weights invariant", a.weights, at.weights);
    check("mv_attention scalars invariant", a.scalars, at.scalars);

    const Tensor<T> xs = c(s);
    const Tensor<T> rf = c(ref), rft = c(transform(m, ref));
    const auto [ax, as] = model::gatr_attention(b, cfg, "blocks.0.attn", b.mv_layer_norm(b.equi_linear(x, b.param("embed.mv.w"))), b.layer_norm(b.dense(xs, b.param("embed.s.w"))), {});
    const auto [axt, ast] = model::gatr_attention(b, cfg, "blocks.0.attn", b.mv_layer_norm(b.equi_linear(xt, b.param("embed.mv.w"))), b.layer_norm(b.dense(xs, b.param("embed.s.w"))), {});
    check("gatr_attention", transform(m, ax), axt);
    check("gatr_attention scalars invariant", as, ast);

    const auto [ex, es] = model::mixed_linear(b, "embed", x, xs);
    const auto [ext, est] = model::mixed_linear(b, "embed", xt, xs);
    const auto [bx, bs] = model::gatr_block(b, cfg, 0, ex, es, rf);
    const auto [bxt, bst] = model::gatr_block(b, cfg, 0, ext, est, rft);
    check("gatr_block", transform(m, bx), bxt);
    check("gatr_block scalars invariant", bs, bst);

    const auto [y, ys] = model::gatr_forward(b, cfg, mv, s);
    const auto [yt, yst] = model::gatr_forward(b, cfg, mv_t, s);
    check("full model", transform(m, y), yt);
    check("full model scalars invariant", ys, yst);
  }
};

// Sandwich matrix of a random versor of a general algebra: product of random unit vectors.
Eigen::MatrixXd generic_sandwich(const ga::CliffordTables& tab, std::mt19937_64& rng, int reflections) {
  const int n = tab.num_blades();
  auto product = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r(n, 0.0);
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        const ga::BladeProduct p = tab.geometric(i, j);
        if (p.sign != 0) r[p.index] += p.sign * a[i] * b[j];
      }
    }
    return r;
  };
  std::normal_distribution<double> normal;
  std::vector<double> u(n, 0.0);
  u[0] = 1.0;
  for (int f = 0; f < reflections; ++f) {
    std::vector<double> vec(n, 0.0);
    double len = 0.0;
    for (int d = 0; d < tab.dimension(); ++d) {
      const int blade = tab.blade_of_mask(1u << d);
      vec[blade] = normal(rng);
      if (tab.metric()[d] != 0) len += tab.metric()[d] * vec[blade] * vec[blade];
    }
    for (double& c : vec) c /= std::sqrt(len);
    u = product(u, vec);
  }
  std::vector<double> inv(n);
  for (int i = 0; i < n; ++i) {
    const int g = tab.grade(i);
    inv[i] = ((g * (g - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * u[i];
  }
  const double norm = product(u, inv)[0];
  for (double& c : inv) c /= norm;
  const bool odd = reflections % 2 == 1;
  Eigen::MatrixXd m(n, n);
  for (int b = 0; b < n; ++b) {
    std::vector<double> e(n, 0.0);
    e[b] = odd && tab.grade(b) % 2 == 1 ? -1.0 : 1.0;
    const std::vector<double> r = product(product(u, e), inv);
    for (int a = 0; a < n; ++a) m(a, b) = r[a];
  }
  return m;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace

std::vector<std::vector<double>> declared_pga_basis() {
  std::vector<std::vector<double>> maps;
  for (int b = 0; b < nn::kNumLinearBasis; ++b) {
    std::vector<double> m(ga::kNumBlades * ga::kNumBlades, 0.0);
    for (int in = 0; in < ga::kNumBlades; ++in) {
      const ga::Multivector r = nn::linear_basis_map(b, ga::Multivector::basis(in));
      for (int out = 0; out < ga::kNumBlades; ++out) m[out * ga::kNumBlades + in] = r[out];
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

std::vector<std::vector<double>> euclidean_grade_projections() {
  const ga::CliffordTables tab({1, 1, 1});
  const int n = tab.num_blades();
  std::vector<std::vector<double>> maps;
  for (int g = 0; g <= 3; ++g) {
    std::vector<double> m(n * n, 0.0);
    for (int b = 0; b < n; ++b) {
      if (tab.grade(b) == g) m[b * n + b] = 1.0;
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

NullSpaceResult equivariant_map_space(const std::vector<int>& metric, int n_versors, std::uint64_t seed,
                                      const std::vector<std::vector<double>>& expected) {
  const ga::CliffordTables tab(metric);
  const int n = tab.num_blades();
  const int nn2 = n * n;
  std::mt19937_64 rng(seed);
  // Rows of L M - M L = 0 for every sampled versor, unknowns L row-major.
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_versors) * nn2, nn2);
  for (int s = 0; s < n_versors; ++s) {
    const Eigen::MatrixXd m = generic_sandwich(tab, rng, 1 + s % 4);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const Eigen::Index row = static_cast<Eigen::Index>(s) * nn2 + r * n + c;
        for (int k = 0; k < n; ++k) {
          sys(row, r * n + k) += m(k, c);
          sys(row, k * n + c) -= m(r, k);
        }
      }
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cutoff = 1e-8 * std::max(1.0, sv(0));
  NullSpaceResult r;
  int kept = 0;
  while (kept < sv.size() && sv(kept) > cutoff) ++kept;
  r.dimension = nn2 - kept;
  r.smallest_kept_singular_value = kept > 0 ? sv(kept - 1) : 0.0;
  r.largest_null_singular_value = kept < sv.size() ? sv(kept) : 0.0;
  const Eigen::MatrixXd null = svd.matrixV().rightCols(r.dimension);

  if (!expected.empty() && r.dimension > 0) {
    Eigen::MatrixXd e(nn2, static_cast<Eigen::Index>(expected.size()));
    for (std::size_t j = 0; j < expected.size(); ++j) {
      for (int i = 0; i < nn2; ++i) e(i, static_cast<Eigen::Index>(j)) = expected[j][i];
    }
    const Eigen::MatrixXd qe = orthonormal_columns(e);
    // Largest principal angle, measured both ways so a dimension mismatch shows up.
    const Eigen::MatrixXd a = qe - null * (null.transpose() * qe);
    const Eigen::MatrixXd b = null - qe * (qe.transpose() * null);
    const double sa = a.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0) : 0.0;
    const double sb = b.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues()(0) : 0.0;
    r.subspace_angle = std::asin(std::min(1.0, std::max(sa, sb)));
  } else {
    r.subspace_angle = expected.empty() && r.dimension == 0 ? 0.0 : std::acos(0.0);
  }
  return r;
}

SuiteReport run_equivariance_suite(const VerifyOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report;
  report.suite = "equivariance";
  detail::Tracker t(report, opt);
  const int trials = opt.trials > 0 ? opt.trials : 100;
  std::mt19937_64 rng(opt.seed);

  model::GatrConfig cfg;
  cfg.seed = opt.seed;
  const model::ParameterSet params = model::init_gatr_params(cfg);
  const LayerChecks<double> f64(cfg, params, rng);
  const LayerChecks<float> f32(cfg, params, rng);

  for (const ga::Versor& u : versor_set(rng, trials)) {
    const ga::SandwichMatrix m = ga::sandwich_matrix(u);
    f64.run(t, m, "(f64)", 1e-10);
    f32.run(t, m, "(f32)", 1e-5);
  }

  // Axial variant: outer = samples x time.
  model::GatrConfig axial = cfg;
  axial.axial = true;
  const model::ParameterSet axial_params = model::init_gatr_params(axial);
  const model::PlainBackend<double> ab(axial_params);
  const Tensor<double> amv = random_tensor(rng, {6, 4, 2, 16});
  const Tensor<double> as = random_tensor(rng, {6, 4, 1, 1});
  const auto [ay, ays] = model::gatr_forward(ab, axial, amv, as, 2);
  for (const ga::Versor& u : versor_set(rng, std::max(3, trials / 10))) {
    const ga::SandwichMatrix m = ga::sandwich_matrix(u);
    const auto [yt, yst] = model::gatr_forward(ab, axial, transform(m, amv), as, 2);
    t.record("full model, axial (f64)", std::max(rel_err(transform(m, ay), yt), rel_err(ays, yst)), 1e-10);
  }

  // Softmax rows and item permutations.
  for (int trial = 0; trial < std::max(1, trials / 10); ++trial) {
    const Tensor<double> logits = random_tensor(rng, {2, 3, 5, 7}, 30.0);
    const Tensor<double> w = nn::softmax(logits);
    double worst = 0.0;
    for (std::size_t r = 0; r < w.size(); r += 7) {
      worst = std::max(worst, std::abs(std::accumulate(w.data() + r, w.data() + r + 7, 0.0) - 1.0));
    }
    t.record("softmax rows sum to one", worst, 1e-12);

    const model::PlainBackend<double> b(params);
    const Tensor<double> mv = random_tensor(rng, {2, 5, 2, 16});
    const Tensor<double> s = random_tensor(rng, {2, 5, 1, 1});
    std::vector<std::size_t> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto [y, ys] = model::gatr_forward(b, cfg, mv, s);
    const auto [yp, ysp] = model::gatr_forward(b, cfg, permute_items(mv, perm), permute_items(s, perm));
    t.record("item permutation equivariance",
             std::max(rel_err(permute_items(y, perm), yp), rel_err(permute_items(ys, perm), ysp)), 1e-10);
  }

  // The equivariant linear maps, reconstructed from random versors.
  const NullSpaceResult pga = equivariant_map_space({0, 1, 1, 1}, 20, opt.seed, declared_pga_basis());
  t.record("linear maps of G(3,0,1): |dim - 9|", std::abs(pga.dimension - 9), 0.0);
  t.record("linear maps of G(3,0,1): subspace angle", pga.subspace_angle, 1e-8);
  const NullSpaceResult e3 = equivariant_map_space({1, 1, 1}, 20, opt.seed, euclidean_grade_projections());
  t.record("linear maps of G(3,0,0): |dim - 4|", std::abs(e3.dimension - 4), 0.0);
  t.record("linear maps of G(3,0,0): subspace angle", e3.subspace_angle, 1e-8);

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gatr::verify

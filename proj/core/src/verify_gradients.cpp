#include <chrono>
#include <functional>

#include "gatr/autodiff/tape.hpp"
#include "gatr/ga/embedding.hpp"
#include "gatr/model/gatr.hpp"
#include "verify_common.hpp"

namespace gatr::verify {
namespace {

using ad::Tensor;

constexpr double kStep = 1e-5;

struct OpCase {
  std::vector<Tensor> inputs;
  ad::OpAttrs attrs;
};

Tensor normal(std::mt19937_64& rng, Tensor::Shape shape, double scale = 1.0, double mean = 0.0) {
  std::normal_distribution<double> n(mean, scale);
  Tensor t(shape);
  for (double& v : t.values()) v = n(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Random inputs for instance `i` of an op; `degenerate` asks for inputs near a singularity.
OpCase make_case(std::string_view op, int i, std::mt19937_64& rng, bool degenerate) {
  const std::size_t o = 2, n = 3, c = 1 + static_cast<std::size_t>(i % 3);
  OpCase k;
  auto mv = [&](std::size_t ch) { return normal(rng, {o, n, ch, 16}); };
  auto sc = [&](std::size_t ch) { return normal(rng, {o, n, ch, 1}); };
  if (op == "equi_linear") {
    k.inputs = {mv(c), normal(rng, {2, c, 9, 1})};
    if (i % 2 == 0) k.inputs.push_back(normal(rng, {2, 1, 1, 1}));
  } else if (op == "dense") {
    k.inputs = {sc(c), normal(rng, {3, c, 1, 1})};
    if (i % 2 == 0) k.inputs.push_back(normal(rng, {3, 1, 1, 1}));
  } else if (op == "scalar_part" || op == "dual" || op == "gated_gelu" || op == "identity" || op == "sum" ||
             op == "reference") {
    k.inputs = {mv(c)};
  } else if (op == "grade_projection") {
    k.inputs = {mv(c)};
    k.attrs.i0 = static_cast<std::size_t>(i % 5);
  } else if (op == "scalar_to_mv" || op == "gelu") {
    k.inputs = {sc(c)};
  } else if (op == "add" || op == "squared_error") {
    k.inputs = {mv(c), mv(c)};
  } else if (op == "scale") {
    k.inputs = {mv(c)};
    k.attrs.f = 0.5 + i;
  } else if (op == "concat_channels") {
    k.inputs = {mv(c), mv(2)};
  } else if (op == "slice_channels") {
    k.inputs = {mv(4)};
    k.attrs.i0 = static_cast<std::size_t>(i % 3);
    k.attrs.i1 = 1 + static_cast<std::size_t>(i % 2);
  } else if (op == "geometric_product" || op == "wedge" || op == "join" || op == "inner") {
    k.inputs = {mv(c), mv(c)};
  } else if (op == "equi_join") {
    k.inputs = {mv(c), mv(c), normal(rng, {o, 1, 1, 16})};
  } else if (op == "mv_layer_norm") {
    k.inputs = {degenerate ? normal(rng, {o, n, c, 16}, 0.05) : mv(c)};
    k.attrs.f = nn::kDefaultLayerNormEps;
  } else if (op == "layer_norm") {
    k.inputs = {degenerate ? normal(rng, {o, n, c + 2, 1}, 0.05, 3.0) : sc(c + 2)};
    k.attrs.f = nn::kDefaultLayerNormEps;
  } else if (op == "attention_logits") {
    k.inputs = {normal(rng, {o, 4, 4, 16}), normal(rng, {o, 5, 4, 16}), normal(rng, {o, 4, 6, 1}),
                normal(rng, {o, 5, 6, 1})};
    k.attrs.i0 = 1 + static_cast<std::size_t>(i % 2);
  } else if (op == "softmax") {
    k.inputs = {degenerate ? normal(rng, {o, 2, 3, 5}, i % 2 ? 1e-4 : 30.0) : normal(rng, {o, 2, 3, 5})};
  } else if (op == "attend") {
    k.inputs = {normal(rng, {o, 2, 4, 5}), normal(rng, {o, 5, 4, i % 2 ? 16u : 1u})};
  } else if (op == "rotary_embed") {
    k.inputs = {normal(rng, {o, 4, 8, 1})};
    k.attrs.positions = {0.0, 1.0, 2.5, 7.0};
    k.attrs.f = 10.0;
    k.attrs.i0 = 1 + static_cast<std::size_t>(i % 2);
  } else if (op == "transpose_grid") {
    k.inputs = {normal(rng, {6, n, c, 16})};
    k.attrs.i0 = 2;
  } else if (op == "reshape") {
    k.inputs = {mv(c)};
    k.attrs.shape = {1, o * n, c, 16};
  } else if (op == "extract_points") {
    Tensor x = mv(c);
    for (std::size_t r = 0; r < x.size(); r += 16) x[r + ga::blade::e123] = 1.0 + std::abs(x[r + ga::blade::e123]);
    k.inputs = {x};
    k.attrs.i0 = static_cast<std::size_t>(i) % c;
  } else {
    throw InvalidArgument("gradient suite: no input generator for op '" + std::string(op) + "'");
  }
  return k;
}

// Reverse mode against central differences of <cotangent, op(inputs)>.
double check_op(int id, OpCase& k, std::mt19937_64& rng) {
  const ad::OpKernel& kern = ad::registered_ops()[static_cast<std::size_t>(id)];
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor& t : k.inputs) vars.push_back(tape.leaf(t, true));
  const ad::Var out = tape.record(id, vars, k.attrs);
  const Tensor cot = normal(rng, tape.value(out).shape());
  tape.backward(out, cot);

  double err = 0.0;
  double scale = 1e-300;
  std::vector<const Tensor*> ptrs;
  for (const Tensor& t : k.inputs) ptrs.push_back(&t);
  for (std::size_t a = 0; a < k.inputs.size(); ++a) {
    const Tensor g = tape.grad(vars[a]);
    Tensor& x = k.inputs[a];
    for (std::size_t e = 0; e < x.size(); ++e) {
      const double old = x[e];
      x[e] = old + kStep;
      const double fp = dot(cot, kern.forward(ptrs, k.attrs));
      x[e] = old - kStep;
      const double fm = dot(cot, kern.forward(ptrs, k.attrs));
      x[e] = old;
      const double fd = (fp - fm) / (2.0 * kStep);
      err = std::max(err, std::abs(fd - g[e]));
      scale = std::max({scale, std::abs(fd), std::abs(g[e])});
    }
  }
  return err / scale;
}

// Loss <y, y> + sum(s) of a model output pair: invariant under every versor.
double invariant_loss(const Tensor& y, const Tensor& s) {
  double l = 0.0;
  for (std::size_t r = 0; r < y.size(); r += 16) l += ga::kernel::inner(y.data() + r, y.data() + r);
  for (double v : s.values()) l += v;
  return l;
}

struct TapeRun {
  double loss;
  std::vector<Tensor> param_grads;
  Tensor mv_grad;
};

TapeRun tape_block(const model::GatrConfig& cfg, const model::ParameterSet& p, const Tensor& mv, const Tensor& s) {
  ad::Tape tape;
  model::TapeBackend b(tape, p);
  const ad::Var x = tape.leaf(mv, true);
  const ad::Var sv = tape.leaf(s, true);
  const ad::Var ref = tape.record("reference", {x});
  auto [y, ys] = model::gatr_block(b, cfg, 0, x, sv, ref);
  const ad::Var loss = tape.add(tape.sum(tape.inner(y, y)), tape.sum(ys));
  tape.backward(loss);
  return {tape.value(loss)[0], b.gradients(), tape.grad(x)};
}

double plain_block(const model::GatrConfig& cfg, const model::ParameterSet& p, const Tensor& mv, const Tensor& s) {
  const model::PlainBackend<double> b(p);
  auto [y, ys] = model::gatr_block(b, cfg, 0, mv, s, nn::reference_multivector(mv));
  return invariant_loss(y, ys);
}

}  // namespace

SuiteReport run_gradient_suite(const VerifyOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport report;
  report.suite = "gradients";
  detail::Tracker t(report, opt);
  const int trials = opt.trials > 0 ? opt.trials : 20;
  std::mt19937_64 rng(opt.seed);

  const auto ops = ad::registered_ops();
  for (std::size_t id = 0; id < ops.size(); ++id) {
    const std::string_view name = ops[id].name;
    for (int i = 0; i < trials; ++i) {
      OpCase k = make_case(name, i, rng, false);
      t.record("op " + std::string(name), check_op(static_cast<int>(id), k, rng), 1e-6);
    }
  }
  for (const char* name : {"softmax", "layer_norm", "mv_layer_norm"}) {
    for (int i = 0; i < trials; ++i) {
      OpCase k = make_case(name, i, rng, true);
      t.record("near-degenerate " + std::string(name), check_op(ad::op_id(name), k, rng), 1e-6);
    }
  }

  // One full block: parameters and inputs, relative to the largest gradient component.
  model::GatrConfig cfg;
  cfg.n_blocks = 1;
  cfg.n_mv_channels = 4;
  cfg.n_scalar_channels = 8;
  cfg.n_heads = 2;
  cfg.seed = opt.seed;
  model::ParameterSet p = model::init_gatr_params(cfg);
  Tensor mv = normal(rng, {2, 3, 4, 16});
  const Tensor s = normal(rng, {2, 3, 8, 1});
  const TapeRun run = tape_block(cfg, p, mv, s);
  t.record("tape forward matches plain forward",
           std::abs(run.loss - plain_block(cfg, p, mv, s)) / std::max(1.0, std::abs(run.loss)), 1e-12);
  double err = 0.0, scale = 1e-300;
  auto probe = [&](double& slot, double analytic) {
    const double old = slot;
    slot = old + kStep;
    const double fp = plain_block(cfg, p, mv, s);
    slot = old - kStep;
    const double fm = plain_block(cfg, p, mv, s);
    slot = old;
    const double fd = (fp - fm) / (2.0 * kStep);
    err = std::max(err, std::abs(fd - analytic));
    scale = std::max({scale, std::abs(fd), std::abs(analytic)});
  };
  for (std::size_t a = 0; a < p.size(); ++a) {
    Tensor& arr = p.arrays()[a];
    const std::size_t stride = std::max<std::size_t>(1, arr.size() / 4);
    for (std::size_t e = 0; e < arr.size(); e += stride) probe(arr[e], run.param_grads[a][e]);
  }
  for (std::size_t e = 0; e < mv.size(); e += 7) probe(mv[e], run.mv_grad[e]);
  t.record("full block", err / scale, 1e-4);

  // Gradients of an invariant loss: parameter gradients invariant, input gradients covariant.
  for (int i = 0; i < std::max(1, trials / 4); ++i) {
    const ga::Versor u = ga::random_versor(rng, 1 + i % 4, 1.0);
    const ga::SandwichMatrix m = ga::sandwich_matrix(u);
    Tensor mv_t(mv.shape());
    for (std::size_t r = 0; r < mv.size(); r += 16) ga::apply_sandwich(m, mv.data() + r, mv_t.data() + r);
    const TapeRun moved = tape_block(cfg, p, mv_t, s);
    double perr = 0.0, pscale = 1e-300;
    for (std::size_t a = 0; a < p.size(); ++a) {
      perr = std::max(perr, nn::max_abs_diff(run.param_grads[a], moved.param_grads[a]));
      pscale = std::max(pscale, nn::max_abs(run.param_grads[a]));
    }
    // d/dx L(M x) = M^T grad L(M x) must equal grad L(x).
    Tensor pulled(mv.shape());
    for (std::size_t r = 0; r < mv.size(); r += 16) {
      for (int c = 0; c < 16; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 16; ++k) acc += m[k][c] * moved.mv_grad[r + k];
        pulled[r + c] = acc;
      }
    }
    t.record("gradient equivariance", std::max(perr / pscale, detail::rel_err(pulled, run.mv_grad)), 1e-8);
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gatr::verify

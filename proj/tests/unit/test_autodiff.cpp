#include <doctest.h>

#include <random>

#include "gatr/autodiff/adam.hpp"
#include "gatr/autodiff/tape.hpp"
#include "gatr/ga/multivector.hpp"

using namespace gatr;
using ad::Tensor;

namespace {

Tensor normal(std::mt19937_64& rng, Tensor::Shape shape) {
  std::normal_distribution<double> n;
  Tensor t(shape);
  for (double& v : t.values()) v = n(rng);
  return t;
}

}  // namespace

TEST_CASE("gradient of <x, x> is twice the e0-free part") {
  std::mt19937_64 rng(1);
  ad::Tape tape;
  const Tensor x0 = normal(rng, {1, 2, 1, 16});
  const ad::Var x = tape.leaf(x0);
  tape.backward(tape.sum(tape.inner(x, x)));
  const Tensor g = tape.grad(x);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool euclid = ga::kEuclideanBlade[i % 16];
    CHECK(g[i] == doctest::Approx(euclid ? 2.0 * x0[i] : 0.0));
  }
}

TEST_CASE("geometric product gradient against central differences") {
  std::mt19937_64 rng(2);
  const Tensor x0 = normal(rng, {1, 1, 2, 16}), y0 = normal(rng, {1, 1, 2, 16});
  const Tensor cot = normal(rng, {1, 1, 2, 16});
  ad::Tape tape;
  const ad::Var x = tape.leaf(x0), y = tape.leaf(y0);
  const ad::Var p = tape.geometric_product(x, y);
  tape.backward(p, cot);
  const Tensor g = tape.grad(x);
  auto f = [&](const Tensor& xv) {
    ad::Tape t2;
    const Tensor out = t2.value(t2.geometric_product(t2.leaf(xv), t2.leaf(y0)));
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * cot[i];
    return s;
  };
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    Tensor a = x0, c = x0;
    a[i] += 1e-5;
    c[i] -= 1e-5;
    const double fd = (f(a) - f(c)) / 2e-5;
    err = std::max(err, std::abs(fd - g[i]));
    scale = std::max(scale, std::abs(fd));
  }
  CHECK(err / scale < 1e-6);
}

TEST_CASE("tape bookkeeping") {
  ad::Tape tape;
  const ad::Var a = tape.leaf(Tensor({1, 1, 1, 1}, {2.0}));
  const ad::Var c = tape.leaf(Tensor({1, 1, 1, 1}, {3.0}), false);
  const ad::Var s = tape.scale(tape.add(a, c), 2.0);
  CHECK(tape.value(s)[0] == 10.0);
  CHECK(tape.requires_grad(s));
  tape.set_value(a, Tensor({1, 1, 1, 1}, {4.0}));
  CHECK_THROWS_AS(tape.backward(s), Error);
  tape.forward();
  CHECK(tape.value(s)[0] == 14.0);
  tape.backward(s);
  CHECK(tape.grad(a)[0] == 2.0);
  CHECK_THROWS(tape.set_value(s, Tensor({1, 1, 1, 1})));
  CHECK_THROWS_AS(ad::op_id("no_such_op"), InvalidArgument);
  CHECK(tape.op_name(s) == "scale");
}

TEST_CASE("adam") {
  ad::AdamConfig cfg;
  CHECK(ad::lr_at(cfg, 0) == doctest::Approx(3e-4));
  CHECK(ad::lr_at(cfg, cfg.total_steps) == doctest::Approx(3e-6));

  std::vector<Tensor> p{Tensor({1, 1, 1, 2}, {1.0, -2.0})};
  const std::vector<Tensor> zero{Tensor({1, 1, 1, 2})};
  ad::Adam opt(cfg);
  opt.step(p, zero);
  CHECK(p[0][0] == 1.0);
  CHECK(p[0][1] == -2.0);

  // f(t) = t^2 from t = 1.
  std::vector<Tensor> t{Tensor({1, 1, 1, 1}, {1.0})};
  ad::Adam opt2(cfg);
  const std::vector<Tensor> g{Tensor({1, 1, 1, 1}, {2.0})};
  opt2.step(t, g);
  CHECK(t[0][0] * t[0][0] < 1.0);

  const std::vector<Tensor> bad{Tensor({1, 1, 1, 1}, {std::nan("")})};
  CHECK_THROWS_AS(opt2.step(t, bad), NumericError);

  ad::AdamConfig clipped = cfg;
  clipped.clip_norm = 1.0;
  CHECK(ad::global_norm(std::vector<Tensor>{Tensor({1, 1, 1, 2}, {3.0, 4.0})}) == doctest::Approx(5.0));
}

#include "gatr/ga/versor.hpp"

#include <cmath>

#include "gatr/ga/embedding.hpp"

namespace gatr::ga {
namespace {

constexpr double kSingularVersor = 1e-12;
constexpr double kParityTolerance = 1e-9;

double squared_norm(const Multivector& u) { return (u * reverse(u))[blade::k1]; }

}  // namespace

Versor make_versor(const Multivector& mv, Parity parity) {
  const double scale = max_abs(mv);
  for (int b = 0; b < kNumBlades; ++b) {
    const bool odd_blade = (kBladeGrade[b] % 2) == 1;
    const bool wrong = (parity == Parity::even) ? odd_blade : !odd_blade;
    if (wrong && std::abs(mv[b]) > kParityTolerance * scale) {
      throw InvalidArgument("make_versor: components inconsistent with the declared parity");
    }
  }
  return normalized(Versor{mv, parity});
}

Versor normalized(const Versor& u) {
  const double n2 = squared_norm(u.mv);
  if (!(std::abs(n2) > kSingularVersor)) {
    throw NumericError("versor is not invertible (<u ~u>_0 is zero)");
  }
  return {u.mv / std::sqrt(std::abs(n2)), u.parity};
}

Versor inverse(const Versor& u) {
  const double n2 = squared_norm(u.mv);
  if (!(std::abs(n2) > kSingularVersor)) {
    throw NumericError("versor is not invertible (<u ~u>_0 is zero)");
  }
  return {reverse(u.mv) / n2, u.parity};
}

Versor compose(const Versor& u, const Versor& v) {
  const Parity p = (u.parity == v.parity) ? Parity::even : Parity::odd;
  return {u.mv * v.mv, p};
}

Multivector sandwich(const Versor& u, const Multivector& x) {
  const Versor inv = inverse(u);
  const Multivector arg = (u.parity == Parity::odd) ? grade_involution(x) : x;
  return u.mv * arg * inv.mv;
}

SandwichMatrix sandwich_matrix(const Versor& u) {
  const Versor inv = inverse(u);
  SandwichMatrix m{};
  for (int c = 0; c < kNumBlades; ++c) {
    Multivector e = Multivector::basis(c);
    if (u.parity == Parity::odd) e = grade_involution(e);
    const Multivector col = u.mv * e * inv.mv;
    for (int r = 0; r < kNumBlades; ++r) m[r][c] = col[r];
  }
  return m;
}

Versor random_versor(std::mt19937_64& rng, int n_reflections, double translation_scale) {
  if (n_reflections < 1) {
    throw InvalidArgument("random_versor: n_reflections must be >= 1");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Versor out;
  for (int i = 0; i < n_reflections; ++i) {
    Vec3 n{};
    double len = 0.0;
    while (len < 1e-8) {
      n = {normal(rng), normal(rng), normal(rng)};
      len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    }
    const double offset = translation_scale * normal(rng);
    out = compose(out, embed_reflection(n, offset));
  }
  return normalized(out);
}

}  // namespace gatr::ga

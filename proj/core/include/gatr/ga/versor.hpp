#pragma once

#include <array>
#include <random>

#include "gatr/ga/multivector.hpp"

namespace gatr::ga {

enum class Parity { even, odd };

/// A product of unit grade-1 elements, tagged with the parity of the factor count.
struct Versor {
  Multivector mv = Multivector::scalar(1.0);
  Parity parity = Parity::even;
};

/// Checks the parity/grade consistency and rescales so that <u ~u>_0 = 1.
/// Throws NumericError if <u ~u>_0 is (close to) zero.
Versor make_versor(const Multivector& mv, Parity parity);

/// Rescales to unit <u ~u>_0 (drift suppression after repeated composition).
Versor normalized(const Versor& u);

/// reverse(u) / <u ~u>_0.
Versor inverse(const Versor& u);

/// u v, parity added mod 2.
Versor compose(const Versor& u, const Versor& v);

/// rho_u(x): u x u^-1 for even u, u x^ u^-1 for odd u.
Multivector sandwich(const Versor& u, const Multivector& x);

/// Matrix of the linear map x -> rho_u(x); column b is rho_u(e_b), row-major [out][in].
using SandwichMatrix = std::array<std::array<double, kNumBlades>, kNumBlades>;
SandwichMatrix sandwich_matrix(const Versor& u);

/// Applies a precomputed sandwich matrix to 16 contiguous coefficients of any precision.
template <class T>
void apply_sandwich(const SandwichMatrix& m, const T* x, T* out) {
  for (int r = 0; r < kNumBlades; ++r) {
    double acc = 0.0;
    for (int c = 0; c < kNumBlades; ++c) acc += m[r][c] * static_cast<double>(x[c]);
    out[r] = static_cast<T>(acc);
  }
}

/// Product of `n_reflections` random planes: unit normals uniform on the sphere,
/// offsets ~ Normal(0, translation_scale).
Versor random_versor(std::mt19937_64& rng, int n_reflections, double translation_scale);

}  // namespace gatr::ga

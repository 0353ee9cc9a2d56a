#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "gatr/error.hpp"
#include "gatr/ga/cayley.hpp"

namespace gatr::ga {

inline constexpr int kNumBlades = 16;
inline constexpr int kMaxGrade = 4;

/// Named blade indices of G(3,0,1) in storage order.
namespace blade {
inline constexpr int k1 = 0;
inline constexpr int e0 = 1;
inline constexpr int e1 = 2;
inline constexpr int e2 = 3;
inline constexpr int e3 = 4;
inline constexpr int e01 = 5;
inline constexpr int e02 = 6;
inline constexpr int e03 = 7;
inline constexpr int e12 = 8;
inline constexpr int e13 = 9;
inline constexpr int e23 = 10;
inline constexpr int e012 = 11;
inline constexpr int e013 = 12;
inline constexpr int e023 = 13;
inline constexpr int e123 = 14;
inline constexpr int e0123 = 15;
}  // namespace blade

inline constexpr std::array<int, kNumBlades> kBladeGrade = {0, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 4};

/// True for the 8 blades without e0; the invariant inner product only sees these.
inline constexpr std::array<bool, kNumBlades> kEuclideanBlade = {
    true, false, true, true, true, false, false, false, true, true, true, false, false, false, true, false};

// Reverse and grade involution signs per blade.
inline constexpr std::array<int, kNumBlades> kReverseSign = {1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 1};
inline constexpr std::array<int, kNumBlades> kInvolutionSign = {1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1, -1, -1, -1, -1, 1};

// ---------------------------------------------------------------------------
// Raw kernels over 16 contiguous coefficients. `out` must not alias inputs.
// ---------------------------------------------------------------------------

namespace kernel {

template <class T>
inline void accumulate_terms(std::span<const ProductTerm> terms, const T* x, const T* y, T* out, T scale = T(1)) {
  for (const ProductTerm& t : terms) {
    out[t.k] += scale * static_cast<T>(t.sign) * x[t.i] * y[t.j];
  }
}

template <class T>
inline void geometric_product(const T* x, const T* y, T* out) {
  for (int b = 0; b < kNumBlades; ++b) out[b] = T(0);
  accumulate_terms(pga_tables().geometric_terms(), x, y, out);
}

template <class T>
inline void wedge(const T* x, const T* y, T* out) {
  for (int b = 0; b < kNumBlades; ++b) out[b] = T(0);
  accumulate_terms(pga_tables().wedge_terms(), x, y, out);
}

template <class T>
inline void join(const T* x, const T* y, T* out) {
  for (int b = 0; b < kNumBlades; ++b) out[b] = T(0);
  accumulate_terms(pga_tables().join_terms(), x, y, out);
}

template <class T>
inline T inner(const T* x, const T* y) {
  return x[0] * y[0] + x[2] * y[2] + x[3] * y[3] + x[4] * y[4] + x[8] * y[8] + x[9] * y[9] +
         x[10] * y[10] + x[14] * y[14];
}

}  // namespace kernel

/// A multivector of G(3,0,1): 16 coefficients over the blade basis above.
template <class T>
struct BasicMultivector {
  std::array<T, kNumBlades> coeffs{};

  static BasicMultivector scalar(T value) {
    BasicMultivector m;
    m.coeffs[blade::k1] = value;
    return m;
  }
  static BasicMultivector basis(int index, T weight = T(1)) {
    BasicMultivector m;
    m.coeffs[index] = weight;
    return m;
  }

  T& operator[](int i) { return coeffs[i]; }
  const T& operator[](int i) const { return coeffs[i]; }
  T* data() { return coeffs.data(); }
  const T* data() const { return coeffs.data(); }

  template <class U>
  BasicMultivector<U> cast() const {
    BasicMultivector<U> r;
    for (int b = 0; b < kNumBlades; ++b) r.coeffs[b] = static_cast<U>(coeffs[b]);
    return r;
  }

  BasicMultivector& operator+=(const BasicMultivector& o) {
    for (int b = 0; b < kNumBlades; ++b) coeffs[b] += o.coeffs[b];
    return *this;
  }
  BasicMultivector& operator-=(const BasicMultivector& o) {
    for (int b = 0; b < kNumBlades; ++b) coeffs[b] -= o.coeffs[b];
    return *this;
  }
  BasicMultivector& operator*=(T s) {
    for (T& c : coeffs) c *= s;
    return *this;
  }
  friend BasicMultivector operator+(BasicMultivector a, const BasicMultivector& b) { return a += b; }
  friend BasicMultivector operator-(BasicMultivector a, const BasicMultivector& b) { return a -= b; }
  friend BasicMultivector operator-(BasicMultivector a) { return a *= T(-1); }
  friend BasicMultivector operator*(BasicMultivector a, T s) { return a *= s; }
  friend BasicMultivector operator*(T s, BasicMultivector a) { return a *= s; }
  friend BasicMultivector operator/(BasicMultivector a, T s) { return a *= T(1) / s; }
  friend bool operator==(const BasicMultivector&, const BasicMultivector&) = default;

  /// Geometric product.
  friend BasicMultivector operator*(const BasicMultivector& x, const BasicMultivector& y) {
    BasicMultivector r;
    kernel::geometric_product(x.data(), y.data(), r.data());
    return r;
  }
};

using Multivector = BasicMultivector<double>;

template <class T>
BasicMultivector<T> geometric_product(const BasicMultivector<T>& x, const BasicMultivector<T>& y) {
  return x * y;
}

template <class T>
BasicMultivector<T> wedge(const BasicMultivector<T>& x, const BasicMultivector<T>& y) {
  BasicMultivector<T> r;
  kernel::wedge(x.data(), y.data(), r.data());
  return r;
}

/// Invariant scalar product <~x y>_0; depends only on the 8 e0-free blades.
template <class T>
T inner(const BasicMultivector<T>& x, const BasicMultivector<T>& y) {
  return kernel::inner(x.data(), y.data());
}

/// sqrt(inner(x, x)); zero for purely ideal multivectors.
template <class T>
T norm(const BasicMultivector<T>& x) {
  return std::sqrt(inner(x, x));
}

/// Left contraction x _| y.
template <class T>
BasicMultivector<T> left_contraction(const BasicMultivector<T>& x, const BasicMultivector<T>& y) {
  BasicMultivector<T> r;
  kernel::accumulate_terms(pga_tables().contraction_terms(), x.data(), y.data(), r.data());
  return r;
}

template <class T>
BasicMultivector<T> reverse(BasicMultivector<T> x) {
  for (int b = 0; b < kNumBlades; ++b) x.coeffs[b] *= static_cast<T>(kReverseSign[b]);
  return x;
}

template <class T>
BasicMultivector<T> grade_involution(BasicMultivector<T> x) {
  for (int b = 0; b < kNumBlades; ++b) x.coeffs[b] *= static_cast<T>(kInvolutionSign[b]);
  return x;
}

template <class T>
BasicMultivector<T> grade_projection(const BasicMultivector<T>& x, int grade) {
  if (grade < 0 || grade > kMaxGrade) {
    throw InvalidArgument("grade_projection: grade must be in [0, 4]");
  }
  BasicMultivector<T> r;
  for (int b = 0; b < kNumBlades; ++b) {
    if (kBladeGrade[b] == grade) r.coeffs[b] = x.coeffs[b];
  }
  return r;
}

/// Right complement: for each blade b, b ^ dual(b) = e0123.
template <class T>
BasicMultivector<T> dual(const BasicMultivector<T>& x) {
  const CliffordTables& t = pga_tables();
  BasicMultivector<T> r;
  for (int b = 0; b < kNumBlades; ++b) {
    const BladeProduct d = t.dual(b);
    r.coeffs[d.index] = static_cast<T>(d.sign) * x.coeffs[b];
  }
  return r;
}

template <class T>
BasicMultivector<T> dual_inverse(const BasicMultivector<T>& x) {
  const CliffordTables& t = pga_tables();
  BasicMultivector<T> r;
  for (int b = 0; b < kNumBlades; ++b) {
    const BladeProduct d = t.dual_inverse(b);
    r.coeffs[d.index] = static_cast<T>(d.sign) * x.coeffs[b];
  }
  return r;
}

/// Regressive product dual_inverse(dual(x) ^ dual(y)), evaluated from the join table.
template <class T>
BasicMultivector<T> join(const BasicMultivector<T>& x, const BasicMultivector<T>& y) {
  BasicMultivector<T> r;
  kernel::join(x.data(), y.data(), r.data());
  return r;
}

/// Join scaled by the pseudoscalar coefficient of a reference multivector.
template <class T>
BasicMultivector<T> equi_join(const BasicMultivector<T>& x, const BasicMultivector<T>& y,
                              const BasicMultivector<T>& reference) {
  return join(x, y) * reference.coeffs[blade::e0123];
}

template <class T>
T max_abs(const BasicMultivector<T>& x) {
  T m = T(0);
  for (T c : x.coeffs) m = std::max(m, std::abs(c));
  return m;
}

template <class T>
bool all_finite(const BasicMultivector<T>& x) {
  for (T c : x.coeffs) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

}  // namespace gatr::ga

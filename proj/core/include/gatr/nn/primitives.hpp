#pragma once

// E(3)-equivariant layers over multivector batches [outer, items, channels, 16]
// and auxiliary scalar batches [outer, items, channels, 1].

#include <array>
#include <cmath>
#include <limits>
#include <span>

#include "gatr/ga/multivector.hpp"
#include "gatr/nn/kernels.hpp"
#include "gatr/nn/tensor.hpp"

namespace gatr::nn {

/// Number of equivariant linear basis maps of G(3,0,1).
inline constexpr int kNumLinearBasis = 9;

/// Target blade of e0 * blade for e0-free blades, -1 otherwise.
inline constexpr std::array<int, ga::kNumBlades> kE0Target = {1, -1, 5, 6, 7, -1, -1, -1, 11, 12, 13, -1, -1, -1, 15, -1};

/// Number of nonzero output components of each basis map:
/// grade projections 0..4, then e0 <x>_k for k = 0..3.
inline constexpr std::array<int, kNumLinearBasis> kLinearBasisOutputs = {1, 4, 6, 4, 1, 1, 3, 3, 1};

inline constexpr double kDefaultLayerNormEps = 1e-6;

/// Basis map `b` applied to one multivector.
template <class T>
ga::BasicMultivector<T> linear_basis_map(int b, const ga::BasicMultivector<T>& x) {
  if (b < 0 || b >= kNumLinearBasis) {
    throw InvalidArgument("linear_basis_map: index must be in [0, 9)");
  }
  ga::BasicMultivector<T> r;
  for (int src = 0; src < ga::kNumBlades; ++src) {
    const int g = ga::kBladeGrade[src];
    if (b < 5) {
      if (g == b) r[src] = x[src];
    } else if (g == b - 5 && kE0Target[src] >= 0) {
      r[kE0Target[src]] = x[src];
    }
  }
  return r;
}

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

template <class T>
void require_mv(const Tensor<T>& x, const char* what) {
  require(x.dim(3) == kMvWidth, what);
}

template <class T>
void require_scalar(const Tensor<T>& x, const char* what) {
  require(x.dim(3) == 1, what);
}

template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

}  // namespace detail

/// Exact Gaussian-CDF GELU.
template <class T>
T gelu(T x) {
  return detail::gelu(x);
}

/// out[c'] = sum_c sum_b w[c', c, b] basis_b(x[c]) + bias[c'] * 1.
/// `weights` is [c_out, c_in, 9, 1]; `bias` is [c_out, 1, 1, 1] or empty.
template <class T>
Tensor<T> equi_linear(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias = {}) {
  detail::require_mv(x, "equi_linear: input must be a multivector batch");
  detail::require(weights.dim(2) == kNumLinearBasis && weights.dim(3) == 1, "equi_linear: weights must be [co, ci, 9, 1]");
  detail::require(weights.dim(1) == x.dim(2), "equi_linear: input channel mismatch");
  const std::size_t co = weights.dim(0);
  const std::size_t ci = weights.dim(1);
  detail::require(bias.empty() || bias.size() == co, "equi_linear: bias must have c_out entries");
  Tensor<T> out({x.dim(0), x.dim(1), co, kMvWidth});
  kernels::equi_linear(x.data(), x.dim(0) * x.dim(1), ci, weights.data(), co, bias.empty() ? nullptr : bias.data(),
                       out.data());
  return out;
}

/// Plain dense map over the channel axis of a scalar batch. `weights` is [co, ci, 1, 1].
template <class T>
Tensor<T> dense(const Tensor<T>& s, const Tensor<T>& weights, const Tensor<T>& bias = {}) {
  detail::require_scalar(s, "dense: input must be a scalar batch");
  detail::require(weights.dim(1) == s.dim(2) && weights.dim(2) == 1 && weights.dim(3) == 1,
                  "dense: weights must be [co, ci, 1, 1] with ci matching the input");
  const std::size_t co = weights.dim(0);
  const std::size_t ci = weights.dim(1);
  detail::require(bias.empty() || bias.size() == co, "dense: bias must have c_out entries");
  Tensor<T> out({s.dim(0), s.dim(1), co, 1});
  kernels::dense(s.data(), s.dim(0) * s.dim(1), ci, weights.data(), co, bias.empty() ? nullptr : bias.data(),
                 out.data());
  return out;
}

/// Scalar-blade coefficient of every channel, as a scalar batch.
template <class T>
Tensor<T> scalar_part(const Tensor<T>& x) {
  detail::require_mv(x, "scalar_part: input must be a multivector batch");
  Tensor<T> out({x.dim(0), x.dim(1), x.dim(2), 1});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i * kMvWidth];
  return out;
}

/// Scalar batch embedded into the scalar blade of multivectors.
template <class T>
Tensor<T> scalar_to_mv(const Tensor<T>& s) {
  detail::require_scalar(s, "scalar_to_mv: input must be a scalar batch");
  Tensor<T> out({s.dim(0), s.dim(1), s.dim(2), kMvWidth});
  for (std::size_t i = 0; i < s.size(); ++i) out[i * kMvWidth] = s[i];
  return out;
}

template <class T>
Tensor<T> add(Tensor<T> a, const Tensor<T>& b) {
  a += b;
  return a;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.dim(0) == b.dim(0) && a.dim(1) == b.dim(1) && a.dim(3) == b.dim(3),
                  "concat_channels: shape mismatch");
  const std::size_t w = a.dim(3);
  const std::size_t ca = a.dim(2) * w;
  const std::size_t cb = b.dim(2) * w;
  Tensor<T> out({a.dim(0), a.dim(1), a.dim(2) + b.dim(2), w});
  const std::size_t rows = a.dim(0) * a.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(b.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return out;
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  detail::require(begin + count <= x.dim(2), "slice_channels: range out of bounds");
  const std::size_t w = x.dim(3);
  Tensor<T> out({x.dim(0), x.dim(1), count, w});
  const std::size_t rows = x.dim(0) * x.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + (r * x.dim(2) + begin) * w, count * w, out.data() + r * count * w);
  }
  return out;
}

/// Channel-wise geometric product.
template <class T>
Tensor<T> geometric_product(const Tensor<T>& x, const Tensor<T>& y) {
  detail::require_mv(x, "geometric_product: multivector batches required");
  x.require_same_shape(y, "geometric_product");
  Tensor<T> out(x.shape());
  const auto terms = ga::pga_tables().geometric_terms();
  for (std::size_t m = 0; m < x.size(); m += kMvWidth) {
    ga::kernel::accumulate_terms(terms, x.data() + m, y.data() + m, out.data() + m);
  }
  return out;
}

/// Channel-wise join scaled by the e0123 coefficient of a per-outer reference [outer, 1, 1, 16].
template <class T>
Tensor<T> equi_join(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& reference) {
  detail::require_mv(x, "equi_join: multivector batches required");
  x.require_same_shape(y, "equi_join");
  detail::require(reference.shape() == typename Tensor<T>::Shape{x.dim(0), 1, 1, kMvWidth},
                  "equi_join: reference must be [outer, 1, 1, 16]");
  Tensor<T> out(x.shape());
  const auto terms = ga::pga_tables().join_terms();
  const std::size_t per_outer = x.dim(1) * x.dim(2) * kMvWidth;
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    const T scale = reference[o * kMvWidth + ga::blade::e0123];
    for (std::size_t m = o * per_outer; m < (o + 1) * per_outer; m += kMvWidth) {
      ga::kernel::accumulate_terms(terms, x.data() + m, y.data() + m, out.data() + m, scale);
    }
  }
  return out;
}

/// Concatenate_channels(x y, EquiJoin(x, y; reference)).
template <class T>
Tensor<T> geometric_bilinear(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& reference) {
  return concat_channels(geometric_product(x, y), equi_join(x, y, reference));
}

/// Each channel multiplied by GELU of its own scalar-blade coefficient.
template <class T>
Tensor<T> gated_gelu(Tensor<T> x) {
  detail::require_mv(x, "gated_gelu: multivector batch required");
  for (std::size_t m = 0; m < x.size(); m += kMvWidth) {
    const T gate = gelu(x[m]);
    for (std::size_t b = 0; b < kMvWidth; ++b) x[m + b] *= gate;
  }
  return x;
}

template <class T>
Tensor<T> gelu(Tensor<T> s) {
  for (T& v : s.values()) v = gelu(v);
  return s;
}

/// x / sqrt(mean_c inner(x_c, x_c) + eps) per (outer, item).
template <class T>
Tensor<T> mv_layer_norm(Tensor<T> x, T eps = T(kDefaultLayerNormEps)) {
  detail::require_mv(x, "mv_layer_norm: multivector batch required");
  const std::size_t ch = x.dim(2);
  detail::require(ch >= 1, "mv_layer_norm: at least one channel required");
  const std::size_t rows = x.dim(0) * x.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = x.data() + r * ch * kMvWidth;
    T acc = T(0);
    for (std::size_t c = 0; c < ch; ++c) acc += ga::kernel::inner(row + c * kMvWidth, row + c * kMvWidth);
    const T inv = T(1) / std::sqrt(acc / static_cast<T>(ch) + eps);
    for (std::size_t i = 0; i < ch * kMvWidth; ++i) row[i] *= inv;
  }
  return x;
}

/// Standard LayerNorm over scalar channels, without a learned affine.
template <class T>
Tensor<T> layer_norm(Tensor<T> s, T eps = T(kDefaultLayerNormEps)) {
  detail::require_scalar(s, "layer_norm: scalar batch required");
  const std::size_t ch = s.dim(2);
  if (ch == 0) return s;
  const std::size_t rows = s.dim(0) * s.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = s.data() + r * ch;
    T mean = T(0);
    for (std::size_t c = 0; c < ch; ++c) mean += row[c];
    mean /= static_cast<T>(ch);
    T var = T(0);
    for (std::size_t c = 0; c < ch; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<T>(ch);
    const T inv = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < ch; ++c) row[c] = (row[c] - mean) * inv;
  }
  return s;
}

/// Attention logits [outer, heads, items_q, items_k]:
/// (sum_c inner(q_c, k_c) + sum_c qs_c ks_c) / sqrt(8 n_mv + n_s), per head.
/// Channels are split into `heads` contiguous groups. Either stream may have zero channels.
template <class T>
Tensor<T> attention_logits(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& qs, const Tensor<T>& ks,
                           std::size_t heads) {
  detail::require_mv(q, "attention_logits: q must be a multivector batch");
  detail::require_mv(k, "attention_logits: k must be a multivector batch");
  detail::require_scalar(qs, "attention_logits: qs must be a scalar batch");
  detail::require_scalar(ks, "attention_logits: ks must be a scalar batch");
  detail::require(heads >= 1, "attention_logits: heads must be >= 1");
  const std::size_t outer = q.dim(0);
  const std::size_t nq = q.dim(1);
  const std::size_t nk = k.dim(1);
  detail::require(k.dim(0) == outer && qs.dim(0) == outer && ks.dim(0) == outer, "attention_logits: outer mismatch");
  detail::require(qs.dim(1) == nq && ks.dim(1) == nk, "attention_logits: item mismatch");
  detail::require(q.dim(2) == k.dim(2) && qs.dim(2) == ks.dim(2), "attention_logits: key/query channel mismatch");
  detail::require(q.dim(2) % heads == 0 && qs.dim(2) % heads == 0,
                  "attention_logits: channel counts must be divisible by heads");
  const std::size_t cm = q.dim(2) / heads;
  const std::size_t cs = qs.dim(2) / heads;
  detail::require(cm + cs > 0, "attention_logits: no key channels");
  const T scale = T(1) / std::sqrt(static_cast<T>(8 * cm + cs));
  Tensor<T> out({outer, heads, nq, nk});
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t j = 0; j < nk; ++j) {
          T acc = T(0);
          for (std::size_t c = h * cm; c < (h + 1) * cm; ++c) {
            acc += ga::kernel::inner(&q.at(o, i, c, 0), &k.at(o, j, c, 0));
          }
          for (std::size_t c = h * cs; c < (h + 1) * cs; ++c) acc += qs.at(o, i, c) * ks.at(o, j, c);
          out.at(o, h, i, j) = acc * scale;
        }
      }
    }
  }
  return out;
}

/// Max-subtracted softmax over the last axis.
template <class T>
Tensor<T> softmax(Tensor<T> logits) {
  const std::size_t n = logits.dim(3);
  detail::require(n >= 1, "softmax: empty axis");
  for (std::size_t r = 0; r < logits.size(); r += n) {
    T* row = logits.data() + r;
    T mx = row[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    T sum = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = std::exp(row[i] - mx);
      sum += row[i];
    }
    for (std::size_t i = 0; i < n; ++i) row[i] /= sum;
  }
  return logits;
}

/// out[o, i', c] = sum_i weights[o, head(c), i', i] v[o, i, c] for any value width.
template <class T>
Tensor<T> attend(const Tensor<T>& weights, const Tensor<T>& v) {
  const std::size_t outer = weights.dim(0);
  const std::size_t heads = weights.dim(1);
  const std::size_t nq = weights.dim(2);
  const std::size_t nk = weights.dim(3);
  detail::require(v.dim(0) == outer && v.dim(1) == nk, "attend: value shape mismatch");
  detail::require(v.dim(2) % heads == 0, "attend: value channels must be divisible by heads");
  const std::size_t ch = v.dim(2);
  const std::size_t per_head = ch / heads;
  const std::size_t w = v.dim(3);
  Tensor<T> out({outer, nq, ch, w});
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t h = c / per_head;
        T* dst = &out.at(o, i, c, 0);
        for (std::size_t j = 0; j < nk; ++j) {
          const T a = weights.at(o, h, i, j);
          const T* src = &v.at(o, j, c, 0);
          for (std::size_t b = 0; b < w; ++b) dst[b] += a * src[b];
        }
      }
    }
  }
  return out;
}

/// Single multivector attention call with auxiliary scalars.
template <class T>
struct AttentionOutput {
  Tensor<T> mv;
  Tensor<T> scalars;
  Tensor<T> weights;
};

template <class T>
AttentionOutput<T> mv_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, const Tensor<T>& qs,
                                const Tensor<T>& ks, const Tensor<T>& vs, std::size_t heads = 1) {
  Tensor<T> weights = softmax(attention_logits(q, k, qs, ks, heads));
  AttentionOutput<T> r;
  r.mv = attend(weights, v);
  r.scalars = attend(weights, vs);
  r.weights = std::move(weights);
  return r;
}

/// Rotary position embedding of scalar queries/keys, applied per head: within each
/// head of d channels, pair (2j, 2j+1) of item i is rotated by positions[i] * base^(-2j/d).
template <class T>
Tensor<T> rotary_embed(Tensor<T> s, std::span<const double> positions, double base, std::size_t heads = 1) {
  detail::require_scalar(s, "rotary_embed: scalar batch required");
  detail::require(positions.size() == s.dim(1), "rotary_embed: one position per item required");
  detail::require(heads >= 1 && s.dim(2) % heads == 0, "rotary_embed: channels must be divisible by heads");
  const std::size_t d = s.dim(2) / heads;
  if (d % 2 != 0) {
    throw InvalidArgument("rotary_embed: per-head scalar channel count must be even");
  }
  for (std::size_t o = 0; o < s.dim(0); ++o) {
    for (std::size_t i = 0; i < s.dim(1); ++i) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t j = 0; j < d / 2; ++j) {
          const double angle = positions[i] * std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(d));
          const T c = static_cast<T>(std::cos(angle));
          const T sn = static_cast<T>(std::sin(angle));
          T& a = s.at(o, i, h * d + 2 * j);
          T& b = s.at(o, i, h * d + 2 * j + 1);
          const T a0 = a;
          a = c * a0 - sn * b;
          b = sn * a0 + c * b;
        }
      }
    }
  }
  return s;
}

/// Mean over items and channels, [outer, 1, 1, 16]: the EquiJoin reference.
template <class T>
Tensor<T> reference_multivector(const Tensor<T>& x) {
  detail::require_mv(x, "reference_multivector: multivector batch required");
  Tensor<T> out({x.dim(0), 1, 1, kMvWidth});
  const std::size_t n = x.dim(1) * x.dim(2);
  detail::require(n > 0, "reference_multivector: empty input");
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t b = 0; b < kMvWidth; ++b) out[o * kMvWidth + b] += x[(o * n + m) * kMvWidth + b];
    }
    for (std::size_t b = 0; b < kMvWidth; ++b) out[o * kMvWidth + b] /= static_cast<T>(n);
  }
  return out;
}

/// Swaps the two inner axes of a 3-axis grid [samples, a, b] flattened as outer = samples * a,
/// items = b, producing outer = samples * b, items = a.
template <class T>
Tensor<T> transpose_grid(const Tensor<T>& x, std::size_t samples) {
  detail::require(samples > 0 && x.dim(0) % samples == 0, "transpose_grid: outer not divisible by samples");
  const std::size_t a = x.dim(0) / samples;
  const std::size_t b = x.dim(1);
  const std::size_t row = x.dim(2) * x.dim(3);
  Tensor<T> out({samples * b, a, x.dim(2), x.dim(3)});
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        std::copy_n(x.data() + ((s * a + i) * b + j) * row, row, out.data() + ((s * b + j) * a + i) * row);
      }
    }
  }
  return out;
}

}  // namespace gatr::nn

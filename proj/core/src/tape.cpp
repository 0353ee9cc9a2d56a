#include "gatr/autodiff/tape.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "gatr/ga/embedding.hpp"
#include "gatr/ga/multivector.hpp"
#include "gatr/nn/kernels.hpp"
#include "gatr/nn/primitives.hpp"

namespace gatr::ad {
namespace {

using nn::kMvWidth;
using Inputs = std::span<const Tensor* const>;
using Grads = std::span<Tensor* const>;

const Tensor& empty_tensor() {
  static const Tensor t;
  return t;
}

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// Bilinear table op: out[k] += scale * sign * x[i] * y[j].
void bilinear_backward(std::span<const ga::ProductTerm> terms, const double* x, const double* y, const double* g,
                       double* gx, double* gy, double scale) {
  for (const ga::ProductTerm& t : terms) {
    const double s = scale * t.sign * g[t.k];
    if (gx) gx[t.i] += s * y[t.j];
    if (gy) gy[t.j] += s * x[t.i];
  }
}

Tensor channelwise(std::span<const ga::ProductTerm> terms, const Tensor& x, const Tensor& y) {
  if (x.dim(3) != kMvWidth) throw ShapeError("bilinear op: multivector batches required");
  x.require_same_shape(y, "bilinear op");
  Tensor out(x.shape());
  for (std::size_t m = 0; m < x.size(); m += kMvWidth) {
    ga::kernel::accumulate_terms(terms, x.data() + m, y.data() + m, out.data() + m);
  }
  return out;
}

void channelwise_backward(std::span<const ga::ProductTerm> terms, Inputs in, const Tensor& g, Grads grads) {
  const Tensor& x = *in[0];
  const Tensor& y = *in[1];
  for (std::size_t m = 0; m < x.size(); m += kMvWidth) {
    bilinear_backward(terms, x.data() + m, y.data() + m, g.data() + m, grads[0] ? grads[0]->data() + m : nullptr,
                      grads[1] ? grads[1]->data() + m : nullptr, 1.0);
  }
}

// --- equi_linear ------------------------------------------------------------

Tensor equi_linear_fwd(Inputs in, const OpAttrs&) {
  return nn::equi_linear(*in[0], *in[1], in.size() > 2 ? *in[2] : empty_tensor());
}

void equi_linear_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  const Tensor& x = *in[0];
  const Tensor& w = *in[1];
  nn::kernels::equi_linear_backward(x.data(), x.dim(0) * x.dim(1), w.dim(1), w.data(), w.dim(0), g.data(),
                                    grads[0] ? grads[0]->data() : nullptr, grads[1] ? grads[1]->data() : nullptr,
                                    grads.size() > 2 && grads[2] ? grads[2]->data() : nullptr);
}

// --- dense --------------------------------------------------------------------

Tensor dense_fwd(Inputs in, const OpAttrs&) { return nn::dense(*in[0], *in[1], in.size() > 2 ? *in[2] : empty_tensor()); }

void dense_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  const Tensor& s = *in[0];
  const Tensor& w = *in[1];
  nn::kernels::dense_backward(s.data(), s.dim(0) * s.dim(1), w.dim(1), w.data(), w.dim(0), g.data(),
                              grads[0] ? grads[0]->data() : nullptr, grads[1] ? grads[1]->data() : nullptr,
                              grads.size() > 2 && grads[2] ? grads[2]->data() : nullptr);
}

// --- routing ops -------------------------------------------------------------

Tensor scalar_part_fwd(Inputs in, const OpAttrs&) { return nn::scalar_part(*in[0]); }
void scalar_part_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i * kMvWidth] += g[i];
}

Tensor scalar_to_mv_fwd(Inputs in, const OpAttrs&) { return nn::scalar_to_mv(*in[0]); }
void scalar_to_mv_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  for (std::size_t i = 0; i < grads[0]->size(); ++i) (*grads[0])[i] += g[i * kMvWidth];
}

Tensor add_fwd(Inputs in, const OpAttrs&) { return nn::add(*in[0], *in[1]); }
void add_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  for (Tensor* gr : grads) {
    if (gr) *gr += g;
  }
}

Tensor scale_fwd(Inputs in, const OpAttrs& a) {
  Tensor out = *in[0];
  for (double& v : out.values()) v *= a.f;
  return out;
}
void scale_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += a.f * g[i];
}

Tensor concat_fwd(Inputs in, const OpAttrs&) { return nn::concat_channels(*in[0], *in[1]); }
void concat_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  const std::size_t ca = in[0]->dim(2);
  const std::size_t cb = in[1]->dim(2);
  if (grads[0]) *grads[0] += nn::slice_channels(g, 0, ca);
  if (grads[1]) *grads[1] += nn::slice_channels(g, ca, cb);
}

Tensor slice_fwd(Inputs in, const OpAttrs& a) { return nn::slice_channels(*in[0], a.i0, a.i1); }
void slice_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  const Tensor& x = *in[0];
  const std::size_t w = x.dim(3);
  const std::size_t rows = x.dim(0) * x.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = grads[0]->data() + (r * x.dim(2) + a.i0) * w;
    const double* src = g.data() + r * a.i1 * w;
    for (std::size_t i = 0; i < a.i1 * w; ++i) dst[i] += src[i];
  }
}

Tensor transpose_fwd(Inputs in, const OpAttrs& a) { return nn::transpose_grid(*in[0], a.i0); }
void transpose_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (grads[0]) *grads[0] += nn::transpose_grid(g, a.i0);
}

Tensor reshape_fwd(Inputs in, const OpAttrs& a) { return in[0]->reshaped(a.shape); }
void reshape_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (grads[0]) *grads[0] += g.reshaped(in[0]->shape());
}

// --- algebra ops -------------------------------------------------------------

Tensor gp_fwd(Inputs in, const OpAttrs&) { return channelwise(ga::pga_tables().geometric_terms(), *in[0], *in[1]); }
void gp_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  channelwise_backward(ga::pga_tables().geometric_terms(), in, g, grads);
}

Tensor wedge_fwd(Inputs in, const OpAttrs&) { return channelwise(ga::pga_tables().wedge_terms(), *in[0], *in[1]); }
void wedge_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  channelwise_backward(ga::pga_tables().wedge_terms(), in, g, grads);
}

Tensor join_fwd(Inputs in, const OpAttrs&) { return channelwise(ga::pga_tables().join_terms(), *in[0], *in[1]); }
void join_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  channelwise_backward(ga::pga_tables().join_terms(), in, g, grads);
}

Tensor equi_join_fwd(Inputs in, const OpAttrs&) { return nn::equi_join(*in[0], *in[1], *in[2]); }
void equi_join_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  const Tensor& x = *in[0];
  const Tensor& y = *in[1];
  const Tensor& ref = *in[2];
  const auto terms = ga::pga_tables().join_terms();
  const std::size_t per_outer = x.dim(1) * x.dim(2) * kMvWidth;
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    const double scale = ref[o * kMvWidth + ga::blade::e0123];
    double ref_grad = 0.0;
    for (std::size_t m = o * per_outer; m < (o + 1) * per_outer; m += kMvWidth) {
      bilinear_backward(terms, x.data() + m, y.data() + m, g.data() + m, grads[0] ? grads[0]->data() + m : nullptr,
                        grads[1] ? grads[1]->data() + m : nullptr, scale);
      if (grads[2]) {
        std::array<double, ga::kNumBlades> j{};
        ga::kernel::accumulate_terms(terms, x.data() + m, y.data() + m, j.data());
        for (int b = 0; b < ga::kNumBlades; ++b) ref_grad += j[b] * g[m + b];
      }
    }
    if (grads[2]) (*grads[2])[o * kMvWidth + ga::blade::e0123] += ref_grad;
  }
}

Tensor dual_fwd(Inputs in, const OpAttrs&) {
  const Tensor& x = *in[0];
  if (x.dim(3) != kMvWidth) throw ShapeError("dual: multivector batch required");
  Tensor out(x.shape());
  const ga::CliffordTables& t = ga::pga_tables();
  for (std::size_t m = 0; m < x.size(); m += kMvWidth) {
    for (int b = 0; b < ga::kNumBlades; ++b) {
      const ga::BladeProduct d = t.dual(b);
      out[m + d.index] = d.sign * x[m + b];
    }
  }
  return out;
}
void dual_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  const ga::CliffordTables& t = ga::pga_tables();
  for (std::size_t m = 0; m < g.size(); m += kMvWidth) {
    for (int b = 0; b < ga::kNumBlades; ++b) {
      const ga::BladeProduct d = t.dual(b);
      (*grads[0])[m + b] += d.sign * g[m + d.index];
    }
  }
}

Tensor grade_fwd(Inputs in, const OpAttrs& a) {
  Tensor out = *in[0];
  if (out.dim(3) != kMvWidth) throw ShapeError("grade_projection: multivector batch required");
  if (a.i0 > static_cast<std::size_t>(ga::kMaxGrade)) throw InvalidArgument("grade_projection: grade must be in [0, 4]");
  for (std::size_t m = 0; m < out.size(); m += kMvWidth) {
    for (int b = 0; b < ga::kNumBlades; ++b) {
      if (static_cast<std::size_t>(ga::kBladeGrade[b]) != a.i0) out[m + b] = 0.0;
    }
  }
  return out;
}
void grade_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  for (std::size_t m = 0; m < g.size(); m += kMvWidth) {
    for (int b = 0; b < ga::kNumBlades; ++b) {
      if (static_cast<std::size_t>(ga::kBladeGrade[b]) == a.i0) (*grads[0])[m + b] += g[m + b];
    }
  }
}

Tensor inner_fwd(Inputs in, const OpAttrs&) {
  const Tensor& x = *in[0];
  const Tensor& y = *in[1];
  if (x.dim(3) != kMvWidth) throw ShapeError("inner: multivector batches required");
  x.require_same_shape(y, "inner");
  Tensor out({x.dim(0), x.dim(1), x.dim(2), 1});
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = ga::kernel::inner(x.data() + i * kMvWidth, y.data() + i * kMvWidth);
  }
  return out;
}
void inner_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int b = 0; b < ga::kNumBlades; ++b) {
      if (!ga::kEuclideanBlade[b]) continue;
      const std::size_t at = i * kMvWidth + b;
      if (grads[0]) (*grads[0])[at] += g[i] * (*in[1])[at];
      if (grads[1]) (*grads[1])[at] += g[i] * (*in[0])[at];
    }
  }
}

// --- nonlinearities and norms -----------------------------------------------

Tensor gated_gelu_fwd(Inputs in, const OpAttrs&) { return nn::gated_gelu(*in[0]); }
void gated_gelu_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  const Tensor& x = *in[0];
  for (std::size_t m = 0; m < x.size(); m += kMvWidth) {
    const double gate = nn::gelu(x[m]);
    double dot = 0.0;
    for (std::size_t b = 0; b < kMvWidth; ++b) {
      (*grads[0])[m + b] += gate * g[m + b];
      dot += g[m + b] * x[m + b];
    }
    (*grads[0])[m] += gelu_derivative(x[m]) * dot;
  }
}

Tensor gelu_fwd(Inputs in, const OpAttrs&) { return nn::gelu(*in[0]); }
void gelu_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += gelu_derivative((*in[0])[i]) * g[i];
}

Tensor mv_layer_norm_fwd(Inputs in, const OpAttrs& a) { return nn::mv_layer_norm(*in[0], a.f); }
void mv_layer_norm_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  const Tensor& x = *in[0];
  const std::size_t ch = x.dim(2);
  const std::size_t row = ch * kMvWidth;
  for (std::size_t r = 0; r < x.dim(0) * x.dim(1); ++r) {
    const double* xr = x.data() + r * row;
    const double* gr = g.data() + r * row;
    double* out = grads[0]->data() + r * row;
    double acc = 0.0;
    double dot = 0.0;
    for (std::size_t c = 0; c < ch; ++c) acc += ga::kernel::inner(xr + c * kMvWidth, xr + c * kMvWidth);
    for (std::size_t i = 0; i < row; ++i) dot += gr[i] * xr[i];
    const double s = 1.0 / std::sqrt(acc / static_cast<double>(ch) + a.f);
    const double k = -s * s * s * dot / static_cast<double>(ch);
    for (std::size_t c = 0; c < ch; ++c) {
      for (int b = 0; b < ga::kNumBlades; ++b) {
        const std::size_t at = c * kMvWidth + b;
        out[at] += s * gr[at] + (ga::kEuclideanBlade[b] ? k * xr[at] : 0.0);
      }
    }
  }
}

Tensor layer_norm_fwd(Inputs in, const OpAttrs& a) { return nn::layer_norm(*in[0], a.f); }
void layer_norm_bwd(Inputs in, const Tensor& y, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  const Tensor& x = *in[0];
  const std::size_t ch = x.dim(2);
  if (ch == 0) return;
  for (std::size_t r = 0; r < x.dim(0) * x.dim(1); ++r) {
    const double* xr = x.data() + r * ch;
    const double* yr = y.data() + r * ch;
    const double* gr = g.data() + r * ch;
    double mean = 0.0;
    for (std::size_t c = 0; c < ch; ++c) mean += xr[c];
    mean /= static_cast<double>(ch);
    double var = 0.0;
    for (std::size_t c = 0; c < ch; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<double>(ch);
    const double inv = 1.0 / std::sqrt(var + a.f);
    double gmean = 0.0;
    double gy = 0.0;
    for (std::size_t c = 0; c < ch; ++c) {
      gmean += gr[c];
      gy += gr[c] * yr[c];
    }
    gmean /= static_cast<double>(ch);
    gy /= static_cast<double>(ch);
    double* out = grads[0]->data() + r * ch;
    for (std::size_t c = 0; c < ch; ++c) out[c] += inv * (gr[c] - gmean - yr[c] * gy);
  }
}

// --- attention ----------------------------------------------------------------

Tensor logits_fwd(Inputs in, const OpAttrs& a) { return nn::attention_logits(*in[0], *in[1], *in[2], *in[3], a.i0); }
void logits_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  const Tensor& q = *in[0];
  const Tensor& k = *in[1];
  const Tensor& qs = *in[2];
  const Tensor& ks = *in[3];
  const std::size_t heads = a.i0;
  const std::size_t cm = q.dim(2) / heads;
  const std::size_t cs = qs.dim(2) / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(8 * cm + cs));
  for (std::size_t o = 0; o < q.dim(0); ++o) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < q.dim(1); ++i) {
        for (std::size_t j = 0; j < k.dim(1); ++j) {
          const double gl = g.at(o, h, i, j) * scale;
          if (gl == 0.0) continue;
          for (std::size_t c = h * cm; c < (h + 1) * cm; ++c) {
            for (int b = 0; b < ga::kNumBlades; ++b) {
              if (!ga::kEuclideanBlade[b]) continue;
              if (grads[0]) grads[0]->at(o, i, c, b) += gl * k.at(o, j, c, b);
              if (grads[1]) grads[1]->at(o, j, c, b) += gl * q.at(o, i, c, b);
            }
          }
          for (std::size_t c = h * cs; c < (h + 1) * cs; ++c) {
            if (grads[2]) grads[2]->at(o, i, c) += gl * ks.at(o, j, c);
            if (grads[3]) grads[3]->at(o, j, c) += gl * qs.at(o, i, c);
          }
        }
      }
    }
  }
}

Tensor softmax_fwd(Inputs in, const OpAttrs&) { return nn::softmax(*in[0]); }
void softmax_bwd(Inputs, const Tensor& y, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  const std::size_t n = y.dim(3);
  for (std::size_t r = 0; r < y.size(); r += n) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += g[r + i] * y[r + i];
    for (std::size_t i = 0; i < n; ++i) (*grads[0])[r + i] += y[r + i] * (g[r + i] - dot);
  }
}

Tensor attend_fwd(Inputs in, const OpAttrs&) { return nn::attend(*in[0], *in[1]); }
void attend_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  const Tensor& w = *in[0];
  const Tensor& v = *in[1];
  const std::size_t heads = w.dim(1);
  const std::size_t ch = v.dim(2);
  const std::size_t per_head = ch / heads;
  const std::size_t width = v.dim(3);
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    for (std::size_t i = 0; i < w.dim(2); ++i) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t h = c / per_head;
        const double* gi = &g.at(o, i, c, 0);
        for (std::size_t j = 0; j < w.dim(3); ++j) {
          const double* vj = &v.at(o, j, c, 0);
          if (grads[0]) {
            double dot = 0.0;
            for (std::size_t b = 0; b < width; ++b) dot += gi[b] * vj[b];
            grads[0]->at(o, h, i, j) += dot;
          }
          if (grads[1]) {
            const double a = w.at(o, h, i, j);
            double* gv = &grads[1]->at(o, j, c, 0);
            for (std::size_t b = 0; b < width; ++b) gv[b] += a * gi[b];
          }
        }
      }
    }
  }
}

Tensor rotary_fwd(Inputs in, const OpAttrs& a) { return nn::rotary_embed(*in[0], a.positions, a.f, a.i0); }
void rotary_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  // The transpose of a rotation is the rotation by the negated angle.
  std::vector<double> negated(a.positions.size());
  for (std::size_t i = 0; i < negated.size(); ++i) negated[i] = -a.positions[i];
  *grads[0] += nn::rotary_embed(g, negated, a.f, a.i0);
}

// --- readout and losses ---------------------------------------------------------

Tensor extract_points_fwd(Inputs in, const OpAttrs& a) {
  const Tensor& x = *in[0];
  if (x.dim(3) != kMvWidth || a.i0 >= x.dim(2)) throw ShapeError("extract_points: bad channel");
  Tensor out({x.dim(0), x.dim(1), 1, 3});
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    for (std::size_t i = 0; i < x.dim(1); ++i) {
      const double* m = &x.at(o, i, a.i0, 0);
      const double w = m[ga::blade::e123];
      if (!(std::abs(w) >= ga::kPointAtInfinityTolerance)) {
        throw NumericError("extract_points: point at infinity");
      }
      out.at(o, i, 0, 0) = m[ga::blade::e023] / w;
      out.at(o, i, 0, 1) = -m[ga::blade::e013] / w;
      out.at(o, i, 0, 2) = m[ga::blade::e012] / w;
    }
  }
  return out;
}
void extract_points_bwd(Inputs in, const Tensor& y, const Tensor& g, const OpAttrs& a, Grads grads) {
  if (!grads[0]) return;
  const Tensor& x = *in[0];
  for (std::size_t o = 0; o < x.dim(0); ++o) {
    for (std::size_t i = 0; i < x.dim(1); ++i) {
      const double w = x.at(o, i, a.i0, ga::blade::e123);
      double* gm = &grads[0]->at(o, i, a.i0, 0);
      const double g0 = g.at(o, i, 0, 0);
      const double g1 = g.at(o, i, 0, 1);
      const double g2 = g.at(o, i, 0, 2);
      gm[ga::blade::e023] += g0 / w;
      gm[ga::blade::e013] -= g1 / w;
      gm[ga::blade::e012] += g2 / w;
      gm[ga::blade::e123] -= (g0 * y.at(o, i, 0, 0) + g1 * y.at(o, i, 0, 1) + g2 * y.at(o, i, 0, 2)) / w;
    }
  }
}

// Mean over rows (outer x items x channels) of the squared Euclidean error along the width axis.
Tensor squared_error_fwd(Inputs in, const OpAttrs&) {
  const Tensor& p = *in[0];
  const Tensor& t = *in[1];
  p.require_same_shape(t, "squared_error");
  const std::size_t rows = p.dim(0) * p.dim(1) * p.dim(2);
  if (rows == 0) throw ShapeError("squared_error: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
  return Tensor({1, 1, 1, 1}, {acc / static_cast<double>(rows)});
}
void squared_error_bwd(Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  const Tensor& p = *in[0];
  const Tensor& t = *in[1];
  const double k = 2.0 * g[0] / static_cast<double>(p.dim(0) * p.dim(1) * p.dim(2));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (grads[0]) (*grads[0])[i] += k * (p[i] - t[i]);
    if (grads[1]) (*grads[1])[i] -= k * (p[i] - t[i]);
  }
}

Tensor sum_fwd(Inputs in, const OpAttrs&) {
  double acc = 0.0;
  for (double v : in[0]->values()) acc += v;
  return Tensor({1, 1, 1, 1}, {acc});
}
void sum_bwd(Inputs, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
  if (!grads[0]) return;
  for (double& v : grads[0]->values()) v += g[0];
}

constexpr std::array<OpKernel, 30> kOps = {{
    {"equi_linear", 2, 3, equi_linear_fwd, equi_linear_bwd},
    {"dense", 2, 3, dense_fwd, dense_bwd},
    {"scalar_part", 1, 1, scalar_part_fwd, scalar_part_bwd},
    {"scalar_to_mv", 1, 1, scalar_to_mv_fwd, scalar_to_mv_bwd},
    {"add", 2, 2, add_fwd, add_bwd},
    {"scale", 1, 1, scale_fwd, scale_bwd},
    {"concat_channels", 2, 2, concat_fwd, concat_bwd},
    {"slice_channels", 1, 1, slice_fwd, slice_bwd},
    {"geometric_product", 2, 2, gp_fwd, gp_bwd},
    {"wedge", 2, 2, wedge_fwd, wedge_bwd},
    {"join", 2, 2, join_fwd, join_bwd},
    {"equi_join", 3, 3, equi_join_fwd, equi_join_bwd},
    {"dual", 1, 1, dual_fwd, dual_bwd},
    {"grade_projection", 1, 1, grade_fwd, grade_bwd},
    {"inner", 2, 2, inner_fwd, inner_bwd},
    {"gated_gelu", 1, 1, gated_gelu_fwd, gated_gelu_bwd},
    {"gelu", 1, 1, gelu_fwd, gelu_bwd},
    {"mv_layer_norm", 1, 1, mv_layer_norm_fwd, mv_layer_norm_bwd},
    {"layer_norm", 1, 1, layer_norm_fwd, layer_norm_bwd},
    {"attention_logits", 4, 4, logits_fwd, logits_bwd},
    {"softmax", 1, 1, softmax_fwd, softmax_bwd},
    {"attend", 2, 2, attend_fwd, attend_bwd},
    {"rotary_embed", 1, 1, rotary_fwd, rotary_bwd},
    {"transpose_grid", 1, 1, transpose_fwd, transpose_bwd},
    {"reshape", 1, 1, reshape_fwd, reshape_bwd},
    {"extract_points", 1, 1, extract_points_fwd, extract_points_bwd},
    {"squared_error", 2, 2, squared_error_fwd, squared_error_bwd},
    {"sum", 1, 1, sum_fwd, sum_bwd},
    {"reference", 1, 1,
     [](Inputs in, const OpAttrs&) { return nn::reference_multivector(*in[0]); },
     [](Inputs in, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
       if (!grads[0]) return;
       const Tensor& x = *in[0];
       const std::size_t n = x.dim(1) * x.dim(2);
       for (std::size_t o = 0; o < x.dim(0); ++o) {
         for (std::size_t m = 0; m < n; ++m) {
           for (std::size_t b = 0; b < kMvWidth; ++b) {
             (*grads[0])[(o * n + m) * kMvWidth + b] += g[o * kMvWidth + b] / static_cast<double>(n);
           }
         }
       }
     }},
    {"identity", 1, 1, [](Inputs in, const OpAttrs&) { return *in[0]; },
     [](Inputs, const Tensor&, const Tensor& g, const OpAttrs&, Grads grads) {
       if (grads[0]) *grads[0] += g;
     }},
}};

}  // namespace

std::span<const OpKernel> registered_ops() { return kOps; }

int op_id(std::string_view name) {
  for (std::size_t i = 0; i < kOps.size(); ++i) {
    if (kOps[i].name == name) return static_cast<int>(i);
  }
  throw InvalidArgument("unregistered op: " + std::string(name));
}

// --- Tape -------------------------------------------------------------------------

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw InvalidArgument("Tape: invalid variable");
  }
  return nodes_[v.id];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor Tape::compute(const Node& n) const {
  std::vector<const Tensor*> in;
  in.reserve(n.inputs.size());
  for (Var v : n.inputs) in.push_back(&nodes_[v.id].value);
  return kOps[static_cast<std::size_t>(n.op)].forward(in, n.attrs);
}

Var Tape::record(int op, std::span<const Var> inputs, OpAttrs attrs) {
  if (op < 0 || static_cast<std::size_t>(op) >= kOps.size()) {
    throw InvalidArgument("Tape::record: unregistered op id");
  }
  const OpKernel& k = kOps[static_cast<std::size_t>(op)];
  const int n_in = static_cast<int>(inputs.size());
  if (n_in < k.min_arity || n_in > k.max_arity) {
    throw InvalidArgument("Tape::record: wrong number of inputs for " + std::string(k.name));
  }
  Node n;
  n.op = op;
  n.attrs = std::move(attrs);
  for (Var v : inputs) {
    const Node& src = node(v);
    n.requires_grad = n.requires_grad || src.requires_grad;
    n.inputs.push_back(v);
  }
  n.value = compute(n);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(std::string_view op, std::initializer_list<Var> inputs, OpAttrs attrs) {
  return record(op_id(op), std::span<const Var>(inputs.begin(), inputs.size()), std::move(attrs));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (v.id < grads_.size() && !grads_[v.id].empty()) return grads_[v.id];
  return Tensor(n.value.shape());
}

std::string_view Tape::op_name(Var v) const {
  const Node& n = node(v);
  return n.op < 0 ? std::string_view("leaf") : kOps[static_cast<std::size_t>(n.op)].name;
}

void Tape::set_value(Var v, Tensor value) {
  if (node(v).op >= 0) throw InvalidArgument("Tape::set_value: not a leaf");
  Node& n = nodes_[v.id];
  if (value.shape() != n.value.shape()) {
    throw ShapeError("Tape::set_value: shape change");
  }
  n.value = std::move(value);
  stale_ = true;
}

void Tape::forward() {
  for (Node& n : nodes_) {
    if (n.op >= 0) n.value = compute(n);
  }
  stale_ = false;
}

void Tape::backward(Var output, const Tensor& seed) {
  if (stale_) {
    throw InvalidArgument("Tape::backward: leaf values changed since the last forward()");
  }
  const Node& out = node(output);
  grads_.assign(nodes_.size(), Tensor());
  if (seed.empty()) {
    grads_[output.id] = Tensor(out.value.shape(), 1.0);
  } else {
    out.value.require_same_shape(seed, "Tape::backward seed");
    grads_[output.id] = seed;
  }
  for (std::size_t id = output.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.op < 0 || grads_[id].empty() || !n.requires_grad) continue;
    std::vector<const Tensor*> in;
    std::vector<Tensor*> gin;
    for (Var v : n.inputs) {
      in.push_back(&nodes_[v.id].value);
      if (nodes_[v.id].requires_grad) {
        if (grads_[v.id].empty()) grads_[v.id] = Tensor(nodes_[v.id].value.shape());
        gin.push_back(&grads_[v.id]);
      } else {
        gin.push_back(nullptr);
      }
    }
    kOps[static_cast<std::size_t>(n.op)].backward(in, n.value, grads_[id], n.attrs, gin);
  }
}

// --- typed helpers --------------------------------------------------------------------

Var Tape::equi_linear(Var x, Var w, Var bias) { return record("equi_linear", {x, w, bias}); }
Var Tape::equi_linear(Var x, Var w) { return record("equi_linear", {x, w}); }
Var Tape::dense(Var s, Var w, Var bias) { return record("dense", {s, w, bias}); }
Var Tape::dense(Var s, Var w) { return record("dense", {s, w}); }
Var Tape::scalar_part(Var x) { return record("scalar_part", {x}); }
Var Tape::scalar_to_mv(Var s) { return record("scalar_to_mv", {s}); }
Var Tape::add(Var a, Var b) { return record("add", {a, b}); }
Var Tape::scale(Var a, double factor) {
  OpAttrs at;
  at.f = factor;
  return record("scale", {a}, std::move(at));
}
Var Tape::concat_channels(Var a, Var b) { return record("concat_channels", {a, b}); }
Var Tape::slice_channels(Var x, std::size_t begin, std::size_t count) {
  OpAttrs at;
  at.i0 = begin;
  at.i1 = count;
  return record("slice_channels", {x}, std::move(at));
}
Var Tape::geometric_product(Var x, Var y) { return record("geometric_product", {x, y}); }
Var Tape::wedge(Var x, Var y) { return record("wedge", {x, y}); }
Var Tape::join(Var x, Var y) { return record("join", {x, y}); }
Var Tape::equi_join(Var x, Var y, Var reference) { return record("equi_join", {x, y, reference}); }
Var Tape::dual(Var x) { return record("dual", {x}); }
Var Tape::grade_projection(Var x, int grade) {
  if (grade < 0 || grade > ga::kMaxGrade) throw InvalidArgument("grade_projection: grade must be in [0, 4]");
  OpAttrs at;
  at.i0 = static_cast<std::size_t>(grade);
  return record("grade_projection", {x}, std::move(at));
}
Var Tape::inner(Var x, Var y) { return record("inner", {x, y}); }
Var Tape::gated_gelu(Var x) { return record("gated_gelu", {x}); }
Var Tape::gelu(Var s) { return record("gelu", {s}); }
Var Tape::mv_layer_norm(Var x, double eps) {
  OpAttrs at;
  at.f = eps;
  return record("mv_layer_norm", {x}, std::move(at));
}
Var Tape::layer_norm(Var s, double eps) {
  OpAttrs at;
  at.f = eps;
  return record("layer_norm", {s}, std::move(at));
}
Var Tape::attention_logits(Var q, Var k, Var qs, Var ks, std::size_t heads) {
  OpAttrs at;
  at.i0 = heads;
  return record("attention_logits", {q, k, qs, ks}, std::move(at));
}
Var Tape::softmax(Var logits) { return record("softmax", {logits}); }
Var Tape::attend(Var weights, Var v) { return record("attend", {weights, v}); }
Var Tape::rotary_embed(Var s, std::vector<double> positions, double base, std::size_t heads) {
  OpAttrs at;
  at.positions = std::move(positions);
  at.f = base;
  at.i0 = heads;
  return record("rotary_embed", {s}, std::move(at));
}
Var Tape::transpose_grid(Var x, std::size_t samples) {
  OpAttrs at;
  at.i0 = samples;
  return record("transpose_grid", {x}, std::move(at));
}
Var Tape::reshape(Var x, nn::Tensor<double>::Shape shape) {
  OpAttrs at;
  at.shape = shape;
  return record("reshape", {x}, std::move(at));
}
Var Tape::extract_points(Var x, std::size_t channel) {
  OpAttrs at;
  at.i0 = channel;
  return record("extract_points", {x}, std::move(at));
}
Var Tape::squared_error(Var prediction, Var target) { return record("squared_error", {prediction, target}); }
Var Tape::sum(Var x) { return record("sum", {x}); }

}  // namespace gatr::ad

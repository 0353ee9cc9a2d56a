#include "gatr/nn/kernels.hpp"

#include <Eigen/Core>
#include <array>
#include <vector>

namespace gatr::nn::kernels {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Map = Eigen::Map<RowMat<T>>;
template <class T>
using CMap = Eigen::Map<const RowMat<T>>;

constexpr int kBlades = 16;
constexpr int kBasis = 9;

// Blades are stored grade-major, so each grade and each e0 source/target set is a
// contiguous blade range.
struct Range {
  int begin, count;
};
constexpr std::array<Range, 5> kGrade = {{{0, 1}, {1, 4}, {5, 6}, {11, 4}, {15, 1}}};
constexpr std::array<Range, 4> kE0Source = {{{0, 1}, {2, 3}, {8, 3}, {14, 1}}};
constexpr std::array<int, 4> kE0Target = {1, 5, 11, 15};

// [rows, c, 16] -> [16, rows, c]
template <class T>
void to_blade_major(const T* x, std::size_t rows, std::size_t c, T* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < c; ++k) {
      const T* src = x + (r * c + k) * kBlades;
      for (int b = 0; b < kBlades; ++b) out[(b * rows + r) * c + k] = src[b];
    }
  }
}

// [co, ci, 9] -> [9, co, ci]
template <class T>
void weights_by_basis(const T* w, std::size_t co, std::size_t ci, T* out) {
  for (std::size_t i = 0; i < co * ci; ++i) {
    for (int k = 0; k < kBasis; ++k) out[k * co * ci + i] = w[i * kBasis + k];
  }
}

}  // namespace

template <class T>
void dense(const T* x, std::size_t rows, std::size_t ci, const T* w, std::size_t co, const T* bias, T* out) {
  Map<T> y(out, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(co));
  if (ci == 0) {
    y.setZero();
  } else {
    y.noalias() = CMap<T>(x, rows, ci) * CMap<T>(w, co, ci).transpose();
  }
  if (bias) y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias, co);
}

void dense_backward(const double* x, std::size_t rows, std::size_t ci, const double* w, std::size_t co,
                    const double* g, double* gx, double* gw, double* gb) {
  CMap<double> gm(g, rows, co);
  if (gx && ci > 0) Map<double>(gx, rows, ci).noalias() += gm * CMap<double>(w, co, ci);
  if (gw && ci > 0) Map<double>(gw, co, ci).noalias() += gm.transpose() * CMap<double>(x, rows, ci);
  if (gb) Eigen::Map<Eigen::RowVectorXd>(gb, co) += gm.colwise().sum();
}

template <class T>
void equi_linear(const T* x, std::size_t rows, std::size_t ci, const T* w, std::size_t co, const T* bias, T* out) {
  std::vector<T> xb(kBlades * rows * ci);
  std::vector<T> wb(kBasis * co * ci);
  std::vector<T> yb(kBlades * rows * co, T(0));
  to_blade_major(x, rows, ci, xb.data());
  weights_by_basis(w, co, ci, wb.data());
  const auto ri = static_cast<Eigen::Index>(rows);
  if (ci > 0) {
    for (int g = 0; g < 5; ++g) {
      const auto n = kGrade[g].count * ri;
      Map<T>(yb.data() + kGrade[g].begin * rows * co, n, co).noalias() +=
          CMap<T>(xb.data() + kGrade[g].begin * rows * ci, n, ci) * CMap<T>(wb.data() + g * co * ci, co, ci).transpose();
    }
    for (int g = 0; g < 4; ++g) {
      const auto n = kE0Source[g].count * ri;
      Map<T>(yb.data() + kE0Target[g] * rows * co, n, co).noalias() +=
          CMap<T>(xb.data() + kE0Source[g].begin * rows * ci, n, ci) *
          CMap<T>(wb.data() + (5 + g) * co * ci, co, ci).transpose();
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < co; ++o) {
      T* dst = out + (r * co + o) * kBlades;
      for (int b = 0; b < kBlades; ++b) dst[b] = yb[(b * rows + r) * co + o];
      if (bias) dst[0] += bias[o];
    }
  }
}

void equi_linear_backward(const double* x, std::size_t rows, std::size_t ci, const double* w, std::size_t co,
                          const double* g, double* gx, double* gw, double* gb) {
  if (gb) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < co; ++o) gb[o] += g[(r * co + o) * kBlades];
    }
  }
  if (ci == 0 || (!gx && !gw)) return;
  std::vector<double> gbm(kBlades * rows * co);
  to_blade_major(g, rows, co, gbm.data());
  const auto ri = static_cast<Eigen::Index>(rows);
  if (gw) {
    std::vector<double> xb(kBlades * rows * ci);
    to_blade_major(x, rows, ci, xb.data());
    std::vector<double> gwb(kBasis * co * ci, 0.0);
    for (int k = 0; k < 5; ++k) {
      const auto n = kGrade[k].count * ri;
      Map<double>(gwb.data() + k * co * ci, co, ci).noalias() +=
          CMap<double>(gbm.data() + kGrade[k].begin * rows * co, n, co).transpose() *
          CMap<double>(xb.data() + kGrade[k].begin * rows * ci, n, ci);
    }
    for (int k = 0; k < 4; ++k) {
      const auto n = kE0Source[k].count * ri;
      Map<double>(gwb.data() + (5 + k) * co * ci, co, ci).noalias() +=
          CMap<double>(gbm.data() + kE0Target[k] * rows * co, n, co).transpose() *
          CMap<double>(xb.data() + kE0Source[k].begin * rows * ci, n, ci);
    }
    for (std::size_t i = 0; i < co * ci; ++i) {
      for (int k = 0; k < kBasis; ++k) gw[i * kBasis + k] += gwb[k * co * ci + i];
    }
  }
  if (gx) {
    std::vector<double> wb(kBasis * co * ci);
    weights_by_basis(w, co, ci, wb.data());
    std::vector<double> gxb(kBlades * rows * ci, 0.0);
    for (int k = 0; k < 5; ++k) {
      const auto n = kGrade[k].count * ri;
      Map<double>(gxb.data() + kGrade[k].begin * rows * ci, n, ci).noalias() +=
          CMap<double>(gbm.data() + kGrade[k].begin * rows * co, n, co) * CMap<double>(wb.data() + k * co * ci, co, ci);
    }
    for (int k = 0; k < 4; ++k) {
      const auto n = kE0Source[k].count * ri;
      Map<double>(gxb.data() + kE0Source[k].begin * rows * ci, n, ci).noalias() +=
          CMap<double>(gbm.data() + kE0Target[k] * rows * co, n, co) *
          CMap<double>(wb.data() + (5 + k) * co * ci, co, ci);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < ci; ++c) {
        double* dst = gx + (r * ci + c) * kBlades;
        for (int b = 0; b < kBlades; ++b) dst[b] += gxb[(b * rows + r) * ci + c];
      }
    }
  }
}

template void dense<float>(const float*, std::size_t, std::size_t, const float*, std::size_t, const float*, float*);
template void dense<double>(const double*, std::size_t, std::size_t, const double*, std::size_t, const double*,
                            double*);
template void equi_linear<float>(const float*, std::size_t, std::size_t, const float*, std::size_t, const float*,
                                 float*);
template void equi_linear<double>(const double*, std::size_t, std::size_t, const double*, std::size_t,
                                  const double*, double*);

}  // namespace gatr::nn::kernels

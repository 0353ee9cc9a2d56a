#pragma once

// Matrix-multiply kernels behind the linear layers. Row-major layouts:
// x [rows, ci(, 16)], w [co, ci(, 9)], out [rows, co(, 16)].

#include <cstddef>

namespace gatr::nn::kernels {

/// out = x w^T + bias (bias may be null).
template <class T>
void dense(const T* x, std::size_t rows, std::size_t ci, const T* w, std::size_t co, const T* bias, T* out);

/// Accumulates gx += g w, gw += g^T x, gb += column sums of g (null pointers are skipped).
void dense_backward(const double* x, std::size_t rows, std::size_t ci, const double* w, std::size_t co,
                    const double* g, double* gx, double* gw, double* gb);

/// Equivariant linear map with 9 basis coefficients per channel pair.
template <class T>
void equi_linear(const T* x, std::size_t rows, std::size_t ci, const T* w, std::size_t co, const T* bias, T* out);

void equi_linear_backward(const double* x, std::size_t rows, std::size_t ci, const double* w, std::size_t co,
                          const double* g, double* gx, double* gw, double* gb);

}  // namespace gatr::nn::kernels

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/kernels.hpp"

namespace lfmdt::kernels::scalar {

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    }
    const T* arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale(std::size_t n, T alpha, const T* x, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

#define LFMDT_INSTANTIATE(T)                                                                  \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*, \
                        std::size_t, T*, std::size_t, bool);                                  \
  template void axpy<T>(std::size_t, T, const T*, T*);                                        \
  template void add<T>(std::size_t, const T*, const T*, T*);                                  \
  template void mul<T>(std::size_t, const T*, const T*, T*);                                  \
  template void scale<T>(std::size_t, T, const T*, T*);

LFMDT_INSTANTIATE(float)
LFMDT_INSTANTIATE(double)
#undef LFMDT_INSTANTIATE

}  // namespace lfmdt::kernels::scalar

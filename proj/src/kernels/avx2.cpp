// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 (see src/CMakeLists.txt). Only reached after the
// dispatcher has confirmed AVX2 support at runtime.

#include <immintrin.h>

#include <algorithm>

#include "lfmdt/kernels.hpp"

namespace lfmdt::kernels::avx2 {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using type = __m256;
  static constexpr std::size_t width = 8;
  static type zero() { return _mm256_setzero_ps(); }
  static type set1(float v) { return _mm256_set1_ps(v); }
  static type load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, type v) { _mm256_storeu_ps(p, v); }
  static type add(type a, type b) { return _mm256_add_ps(a, b); }
  static type mul(type a, type b) { return _mm256_mul_ps(a, b); }
};

template <>
struct Vec<double> {
  using type = __m256d;
  static constexpr std::size_t width = 4;
  static type zero() { return _mm256_setzero_pd(); }
  static type set1(double v) { return _mm256_set1_pd(v); }
  static type load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, type v) { _mm256_storeu_pd(p, v); }
  static type add(type a, type b) { return _mm256_add_pd(a, b); }
  static type mul(type a, type b) { return _mm256_mul_pd(a, b); }
};

constexpr std::size_t kBlockK = 128;
constexpr std::size_t kBlockN = 256;
constexpr std::size_t kRows = 4;

// Accumulates rows [i, i+R) x columns [j0, j1) of C over p in [p0, p1).
template <typename T, std::size_t R>
void micro_tile(std::size_t i, std::size_t j0, std::size_t j1, std::size_t p0, std::size_t p1,
                const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
                bool load_c) {
  using V = Vec<T>;
  constexpr std::size_t W = V::width;
  std::size_t j = j0;
  for (; j + 2 * W <= j1; j += 2 * W) {
    typename V::type acc[R][2];
    for (std::size_t r = 0; r < R; ++r) {
      T* crow = c + (i + r) * ldc + j;
      acc[r][0] = load_c ? V::load(crow) : V::zero();
      acc[r][1] = load_c ? V::load(crow + W) : V::zero();
    }
    for (std::size_t p = p0; p < p1; ++p) {
      const T* brow = b + p * ldb + j;
      const auto b0 = V::load(brow);
      const auto b1 = V::load(brow + W);
      for (std::size_t r = 0; r < R; ++r) {
        const auto av = V::set1(a[(i + r) * lda + p]);
        acc[r][0] = V::add(acc[r][0], V::mul(av, b0));
        acc[r][1] = V::add(acc[r][1], V::mul(av, b1));
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      T* crow = c + (i + r) * ldc + j;
      V::store(crow, acc[r][0]);
      V::store(crow + W, acc[r][1]);
    }
  }
  for (; j + W <= j1; j += W) {
    typename V::type acc[R];
    for (std::size_t r = 0; r < R; ++r) {
      acc[r] = load_c ? V::load(c + (i + r) * ldc + j) : V::zero();
    }
    for (std::size_t p = p0; p < p1; ++p) {
      const auto bv = V::load(b + p * ldb + j);
      for (std::size_t r = 0; r < R; ++r) {
        acc[r] = V::add(acc[r], V::mul(V::set1(a[(i + r) * lda + p]), bv));
      }
    }
    for (std::size_t r = 0; r < R; ++r) V::store(c + (i + r) * ldc + j, acc[r]);
  }
  for (; j < j1; ++j) {
    for (std::size_t r = 0; r < R; ++r) {
      T acc = load_c ? c[(i + r) * ldc + j] : T(0);
      for (std::size_t p = p0; p < p1; ++p) acc += a[(i + r) * lda + p] * b[p * ldb + j];
      c[(i + r) * ldc + j] = acc;
    }
  }
}

template <typename T>
void gemm_impl(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
               const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, T(0));
    }
    return;
  }
  for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
    const std::size_t j1 = std::min(n, j0 + kBlockN);
    for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
      const std::size_t p1 = std::min(k, p0 + kBlockK);
      const bool load_c = accumulate || p0 > 0;
      std::size_t i = 0;
      for (; i + kRows <= m; i += kRows) {
        micro_tile<T, kRows>(i, j0, j1, p0, p1, a, lda, b, ldb, c, ldc, load_c);
      }
      for (; i < m; ++i) micro_tile<T, 1>(i, j0, j1, p0, p1, a, lda, b, ldb, c, ldc, load_c);
    }
  }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  gemm_impl<T>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  using V = Vec<T>;
  const auto av = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) {
    V::store(y + i, V::add(V::load(y + i), V::mul(av, V::load(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out) {
  using V = Vec<T>;
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) {
    V::store(out + i, V::add(V::load(a + i), V::load(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out) {
  using V = Vec<T>;
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) {
    V::store(out + i, V::mul(V::load(a + i), V::load(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale(std::size_t n, T alpha, const T* x, T* out) {
  using V = Vec<T>;
  const auto av = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::width <= n; i += V::width) V::store(out + i, V::mul(av, V::load(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
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

}  // namespace lfmdt::kernels::avx2

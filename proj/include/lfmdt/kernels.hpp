// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops of the tensor engine. Every kernel has a scalar
// reference implementation and, where the target supports it, an AVX2 variant.
// The variant is chosen once at startup (or forced via set_backend / the
// LFMDT_KERNELS environment variable).
//
// All variants vectorise across independent outputs only. Each output element
// is accumulated in the same sequential order as the scalar loop, with separate
// multiply and add (no FMA), so the backends agree bit for bit.

namespace lfmdt::kernels {

enum class Backend { scalar, avx2 };

std::string_view to_string(Backend backend) noexcept;

bool backend_available(Backend backend) noexcept;

/// Best backend supported by the running CPU, unless LFMDT_KERNELS=scalar|avx2.
Backend detect_backend() noexcept;

Backend active_backend() noexcept;

/// Throws usage error if the backend is not available on this CPU/build.
void set_backend(Backend backend);

/// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]; row strides lda/ldb/ldc.
/// For every C[i][j] the products are added in ascending k order.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate);

/// y[i] += alpha * x[i]
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y);

/// out[i] = a[i] + b[i]
template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out);

/// out[i] = a[i] * b[i]
template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out);

/// out[i] = alpha * x[i]
template <typename T>
void scale(std::size_t n, T alpha, const T* x, T* out);

// Direct entry points, used by the equivalence tests.
namespace scalar {
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate);
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out);
template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out);
template <typename T>
void scale(std::size_t n, T alpha, const T* x, T* out);
}  // namespace scalar

namespace avx2 {
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate);
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out);
template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out);
template <typename T>
void scale(std::size_t n, T alpha, const T* x, T* out);
}  // namespace avx2

}  // namespace lfmdt::kernels

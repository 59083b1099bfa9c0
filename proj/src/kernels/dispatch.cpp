// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "lfmdt/error.hpp"
#include "lfmdt/kernels.hpp"

namespace lfmdt::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if LFMDT_HAVE_AVX2 && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect_backend()};
  return backend;
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend backend) noexcept {
  return backend == Backend::scalar || cpu_has_avx2();
}

Backend detect_backend() noexcept {
  if (const char* forced = std::getenv("LFMDT_KERNELS")) {
    const std::string name(forced);
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2" && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    raise(ErrorKind::usage,
          "kernel backend '" + std::string(to_string(backend)) + "' is not available");
  }
  current().store(backend, std::memory_order_relaxed);
}

#if LFMDT_HAVE_AVX2
#define LFMDT_DISPATCH(fn, ...)                                      \
  if (active_backend() == Backend::avx2) return avx2::fn(__VA_ARGS__); \
  return scalar::fn(__VA_ARGS__)
#else
#define LFMDT_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  LFMDT_DISPATCH(gemm<T>, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  LFMDT_DISPATCH(axpy<T>, n, alpha, x, y);
}

template <typename T>
void add(std::size_t n, const T* a, const T* b, T* out) {
  LFMDT_DISPATCH(add<T>, n, a, b, out);
}

template <typename T>
void mul(std::size_t n, const T* a, const T* b, T* out) {
  LFMDT_DISPATCH(mul<T>, n, a, b, out);
}

template <typename T>
void scale(std::size_t n, T alpha, const T* x, T* out) {
  LFMDT_DISPATCH(scale<T>, n, alpha, x, out);
}

#undef LFMDT_DISPATCH

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

}  // namespace lfmdt::kernels

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>

#include "lfmdt/kernels.hpp"
#include "lfmdt/tensor.hpp"
#include "oracles.hpp"

using namespace lfmdt;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no lfmdt::Error raised";
  return ErrorKind::usage;
}

template <typename T>
bool bit_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

}  // namespace

TEST(Tensor, ShapeInvariants) {
  Tensor<float> t(Shape{2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(kind_of([] { Tensor<float>(Shape{2, 0}); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([] { Tensor<float>(Shape{}); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([] { Tensor<double>(Shape{2, 2}, std::vector<double>(3)); }),
            ErrorKind::dimension);
}

TEST(Tensor, RowMajorOffsets) {
  Tensor<double> t(Shape{2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  EXPECT_EQ(t.at({1, 2, 3}), 23.0);
  EXPECT_EQ(t.at({0, 1, 0}), 4.0);
  EXPECT_EQ(kind_of([&] { t.at({2, 0, 0}); }), ErrorKind::index);
  EXPECT_EQ(kind_of([&] { t.at({0, 0}); }), ErrorKind::index);
}

TEST(Tensor, ReshapeKeepsData) {
  oracle::Rng rng(1);
  auto t = oracle::random_tensor(Shape{3, 4}, rng);
  auto r = t.reshaped(Shape{2, 6});
  EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), r.values().begin()));
  EXPECT_EQ(kind_of([&] { t.reshaped(Shape{5}); }), ErrorKind::dimension);
}

TEST(Tensor, PermuteMatchesIndexLoop) {
  oracle::Rng rng(2);
  const Shape s{2, 3, 4, 5, 2};
  auto x = oracle::random_tensor(s, rng);
  const std::vector<std::size_t> axes{2, 3, 0, 1, 4};
  auto y = permute(x, axes);
  ASSERT_EQ(y.shape(), (Shape{4, 5, 2, 3, 2}));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t d = 0; d < 5; ++d)
          for (std::size_t e = 0; e < 2; ++e) ASSERT_EQ(y.at({c, d, a, b, e}), x.at({a, b, c, d, e}));
  // inverse permutation restores the input
  EXPECT_EQ(permute(y, {2, 3, 0, 1, 4}), x);
}

TEST(Tensor, PermuteRejectsBadAxes) {
  Tensor<float> x(Shape{2, 3});
  EXPECT_EQ(kind_of([&] { permute(x, {0, 0}); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([&] { permute(x, {0}); }), ErrorKind::dimension);
}

TEST(Tensor, TransposeInto) {
  oracle::Rng rng(3);
  for (std::size_t rows : {1u, 7u, 16u, 33u})
    for (std::size_t cols : {1u, 5u, 16u, 40u}) {
      auto x = oracle::random_tensor<float>(Shape{rows, cols}, rng);
      std::vector<float> t(rows * cols);
      transpose_into(x.data(), rows, cols, t.data());
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) ASSERT_EQ(t[j * rows + i], x.at({i, j}));
    }
}

// --- kernel backends ---------------------------------------------------------

#if LFMDT_HAVE_AVX2

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!kernels::backend_available(kernels::Backend::avx2)) GTEST_SKIP() << "no AVX2 on this host";
  }
};

template <typename T>
void check_gemm(oracle::Rng& rng) {
  for (std::size_t m : {1u, 3u, 8u, 17u})
    for (std::size_t n : {1u, 4u, 7u, 8u, 9u, 16u, 31u, 64u})
      for (std::size_t k : {1u, 2u, 5u, 24u}) {
        for (bool acc : {false, true}) {
          const std::size_t lda = k + 1, ldb = n + 3, ldc = n + 2;
          auto a = oracle::random_tensor<T>(Shape{m * lda}, rng);
          auto b = oracle::random_tensor<T>(Shape{k * ldb}, rng);
          auto c0 = oracle::random_tensor<T>(Shape{m * ldc}, rng);
          std::vector<T> s(c0.values().begin(), c0.values().end()), v = s;
          kernels::scalar::gemm(m, n, k, a.data(), lda, b.data(), ldb, s.data(), ldc, acc);
          kernels::avx2::gemm(m, n, k, a.data(), lda, b.data(), ldb, v.data(), ldc, acc);
          ASSERT_TRUE(bit_equal(s, v)) << m << "x" << n << "x" << k << " acc=" << acc;
        }
      }
}

TEST_F(KernelEquivalence, GemmFloat) {
  oracle::Rng rng(10);
  check_gemm<float>(rng);
}

TEST_F(KernelEquivalence, GemmDouble) {
  oracle::Rng rng(11);
  check_gemm<double>(rng);
}

template <typename T>
void check_elementwise(oracle::Rng& rng) {
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 1000u}) {
    auto x = oracle::random_tensor<T>(Shape{n + 1}, rng);
    auto y = oracle::random_tensor<T>(Shape{n + 1}, rng);
    const T alpha = static_cast<T>(rng.uniform());
    std::vector<T> s(y.values().begin(), y.values().end()), v = s;
    kernels::scalar::axpy(n, alpha, x.data(), s.data());
    kernels::avx2::axpy(n, alpha, x.data(), v.data());
    ASSERT_TRUE(bit_equal(s, v)) << "axpy " << n;
    kernels::scalar::add(n, x.data(), y.data(), s.data());
    kernels::avx2::add(n, x.data(), y.data(), v.data());
    ASSERT_TRUE(bit_equal(s, v)) << "add " << n;
    kernels::scalar::mul(n, x.data(), y.data(), s.data());
    kernels::avx2::mul(n, x.data(), y.data(), v.data());
    ASSERT_TRUE(bit_equal(s, v)) << "mul " << n;
    kernels::scalar::scale(n, alpha, x.data(), s.data());
    kernels::avx2::scale(n, alpha, x.data(), v.data());
    ASSERT_TRUE(bit_equal(s, v)) << "scale " << n;
  }
}

TEST_F(KernelEquivalence, ElementwiseFloat) {
  oracle::Rng rng(12);
  check_elementwise<float>(rng);
}

TEST_F(KernelEquivalence, ElementwiseDouble) {
  oracle::Rng rng(13);
  check_elementwise<double>(rng);
}

#endif  // LFMDT_HAVE_AVX2

TEST(Kernels, ScalarGemmMatchesTripleLoop) {
  oracle::Rng rng(14);
  auto a = oracle::random_tensor(Shape{5, 6}, rng);
  auto b = oracle::random_tensor(Shape{6, 7}, rng);
  Tensor<double> c(Shape{5, 7});
  kernels::scalar::gemm<double>(5, 7, 6, a.data(), 6, b.data(), 7, c.data(), 7, false);
  EXPECT_LE(oracle::max_abs_diff(c, oracle::matmul(a, b)), 1e-12);
}

TEST(Kernels, BackendSelection) {
  const auto before = kernels::active_backend();
  kernels::set_backend(kernels::Backend::scalar);
  EXPECT_EQ(kernels::active_backend(), kernels::Backend::scalar);
  if (!kernels::backend_available(kernels::Backend::avx2)) {
    EXPECT_EQ(kind_of([] { kernels::set_backend(kernels::Backend::avx2); }), ErrorKind::usage);
  }
  kernels::set_backend(before);
}

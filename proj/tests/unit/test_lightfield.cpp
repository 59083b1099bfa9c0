// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "lfmdt/lightfield.hpp"
#include "oracles.hpp"

using namespace lfmdt;
using oracle::Rng;
using oracle::T5;

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

LightField random_field(std::size_t U, std::size_t V, std::size_t H, std::size_t W, std::size_t C,
                        Rng& rng) {
  LightField lf(U, V, H, W, C);
  for (auto& v : lf.tensor().values()) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return lf;
}

bool same_bits(const LightField& a, const LightField& b) {
  return a.tensor().shape() == b.tensor().shape() &&
         std::memcmp(a.tensor().data(), b.tensor().data(), a.tensor().size() * sizeof(float)) == 0;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lfmdt_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

// --- subsets ----------------------------------------------------------------

TEST(SaiSubset, SortedAndValidated) {
  SaiSubset s({{4, 4}, {0, 0}, {0, 4}});
  EXPECT_EQ(s.coords().front(), (SaiCoord{0, 0}));
  EXPECT_EQ(s.coords().back(), (SaiCoord{4, 4}));
  EXPECT_EQ(s.flat_indices(5, 5), (std::vector<std::size_t>{0, 4, 24}));
  EXPECT_EQ(kind_of([] { SaiSubset({}); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { SaiSubset({{1, 1}, {1, 1}}); }), ErrorKind::config);
  EXPECT_EQ(kind_of([&] { s.validate_for(4, 5); }), ErrorKind::index);
}

TEST(SaiSubset, ParseRoundTrip) {
  auto s = SaiSubset::parse("0,0 0,4; 4,0  4,4");
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(SaiSubset::parse(s.to_string()), s);
  EXPECT_EQ(kind_of([] { SaiSubset::parse("0;1"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { SaiSubset::parse("a,b"); }), ErrorKind::config);
}

// --- .lfb -------------------------------------------------------------------

TEST(Lfb, SizeArithmetic) {
  LightField lf(1, 1, 2, 2, 1);
  lf.tensor() = Tensor<float>(Shape{1, 1, 2, 2, 1}, {0.f, 0.25f, 0.5f, 1.f});
  const auto bytes = encode_lfb(lf);
  EXPECT_EQ(bytes.size(), 28u + 16u);
  EXPECT_TRUE(same_bits(decode_lfb(bytes), lf));
}

TEST(Lfb, MalformedInput) {
  EXPECT_EQ(kind_of([] { decode_lfb({}); }), ErrorKind::format);
  Rng rng(1);
  auto bytes = encode_lfb(random_field(2, 2, 4, 4, 1, rng));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_lfb(bad); }), ErrorKind::format);
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(kind_of([&] { decode_lfb(bad); }), ErrorKind::format);
  bad = bytes;
  bad.pop_back();
  EXPECT_EQ(kind_of([&] { decode_lfb(bad); }), ErrorKind::length);
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(kind_of([&] { decode_lfb(bad); }), ErrorKind::length);
}

TEST(Lfb, OutOfRangeValuesWarnAndClamp) {
  LightField lf(1, 1, 1, 2, 1);
  lf.at(0, 0, 0, 0) = -0.5f;
  lf.at(0, 0, 0, 1) = 1.0005f;
  std::vector<std::string> warnings;
  auto back = decode_lfb(encode_lfb(lf), &warnings);
  EXPECT_EQ(back.at(0, 0, 0, 0), 0.0f);
  EXPECT_EQ(back.at(0, 0, 0, 1), 1.0f);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Lfb, RandomRoundTripsAreBitExact) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto lf = random_field(1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(9),
                                 1 + rng.below(9), 1 + rng.below(3), rng);
    ASSERT_TRUE(same_bits(decode_lfb(encode_lfb(lf)), lf)) << "case " << i;
  }
  const auto big = random_field(5, 5, 16, 16, 1, rng);
  const auto path = temp_path("roundtrip.lfb");
  write_lfb(big, path);
  EXPECT_TRUE(same_bits(read_lfb(path), big));
  EXPECT_EQ(kind_of([] { read_lfb("/nonexistent/x.lfb"); }), ErrorKind::io);
}

TEST(Png, EightBitRoundTrip) {
  LightField lf(1, 2, 3, 5, 3);
  for (std::size_t i = 0; i < lf.tensor().size(); ++i) lf.tensor()[i] = static_cast<float>(i % 256) / 255.f;
  const auto path = temp_path("sai.png");
  write_sai_png(lf, 0, 1, path);
  auto back = read_sai_png(path);
  ASSERT_EQ(back.tensor().shape(), (Shape{1, 1, 3, 5, 3}));
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 5; ++x)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(back.at(0, 0, y, x, c), lf.at(0, 1, y, x, c));
}

// --- colour -----------------------------------------------------------------

TEST(Color, LumaCoefficients) {
  LightField rgb(1, 1, 1, 3, 3);
  const float px[3][3] = {{1, 1, 1}, {0, 0, 0}, {1, 0, 0}};
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t c = 0; c < 3; ++c) rgb.at(0, 0, 0, x, c) = px[x][c];
  auto y = rgb_to_y(rgb);
  EXPECT_NEAR(y.at(0, 0, 0, 0), 235.0 / 255.0, 1e-6);
  EXPECT_NEAR(y.at(0, 0, 0, 1), 16.0 / 255.0, 1e-6);
  EXPECT_NEAR(y.at(0, 0, 0, 2), (65.481 + 16) / 255.0, 1e-6);
}

TEST(Color, YCbCrRoundTrip) {
  Rng rng(3);
  auto rgb = random_field(1, 2, 3, 4, 3, rng);
  auto back = ycbcr_to_rgb(rgb_to_ycbcr(rgb));
  for (std::size_t i = 0; i < rgb.tensor().size(); ++i) EXPECT_NEAR(back.tensor()[i], rgb.tensor()[i], 1e-5);
  auto y = rgb_to_y(rgb), ycc = rgb_to_ycbcr(rgb);
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(y.at(0, 1, 2, x), ycc.at(0, 1, 2, x, 0), 1e-6);
}

// --- bicubic ----------------------------------------------------------------

TEST(Bicubic, KernelValues) {
  EXPECT_EQ(cubic_kernel(0.0), 1.0);
  EXPECT_EQ(cubic_kernel(1.0), 0.0);
  EXPECT_EQ(cubic_kernel(2.0), 0.0);
  EXPECT_EQ(cubic_kernel(-0.5), cubic_kernel(0.5));
  EXPECT_DOUBLE_EQ(cubic_kernel(0.5), 0.5625);
}

TEST(Bicubic, ConstantPlaneStaysConstant) {
  for (double scale : {0.25, 0.5, 2.0, 3.0, 4.0}) {
    auto out = bicubic_resize(T5(Shape{8, 12}, 0.7), scale);
    for (double v : out.values()) ASSERT_NEAR(v, 0.7, 1e-12) << scale;
  }
}

TEST(Bicubic, ReproducesLinearRamp) {
  // Interior output samples of an upscaled ramp lie on the ramp.
  const std::size_t n = 16;
  T5 ramp(Shape{n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) ramp.at({y, x}) = 0.01 * y + 0.03 * x;
  auto out = bicubic_resize(ramp, 2.0);
  for (std::size_t y = 4; y < 2 * n - 4; ++y)
    for (std::size_t x = 4; x < 2 * n - 4; ++x) {
      const double sy = (y + 0.5) / 2 - 0.5, sx = (x + 0.5) / 2 - 0.5;
      ASSERT_NEAR(out.at({y, x}), 0.01 * sy + 0.03 * sx, 1e-6);
    }
}

TEST(Bicubic, MatchesDirectOracle) {
  Rng rng(4);
  for (double scale : {0.5, 0.25, 2.0, 4.0, 1.0 / 3.0}) {
    auto plane = oracle::random_tensor(Shape{12, 9}, rng, 0, 1);
    auto got = bicubic_resize(plane, scale);
    ASSERT_LE(oracle::max_abs_diff(got, oracle::bicubic(plane, scale)), 1e-12) << scale;
  }
}

TEST(Bicubic, DownscaledSinusoidMatchesLoopOracle) {
  const std::size_t n = 32;
  T5 plane(Shape{n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      plane.at({y, x}) = 0.5 + 0.2 * std::sin(2 * std::numbers::pi * (0.05 * y + 0.08 * x)) +
                         0.1 * std::cos(2 * std::numbers::pi * 0.11 * x + 0.3);
  EXPECT_LE(oracle::max_abs_diff(bicubic_resize(plane, 0.5), oracle::bicubic(plane, 0.5)), 1e-6);
}

TEST(Bicubic, SmallPlaneIsSizeError) {
  EXPECT_EQ(kind_of([] { bicubic_resize(T5(Shape{3, 8}), 2.0); }), ErrorKind::size);
}

TEST(Degrade, ConstantFieldAndIdentity) {
  LightField c(2, 3, 8, 12, 1, 0.3f);
  auto lr = degrade(c, 2);
  ASSERT_EQ(lr.tensor().shape(), (Shape{2, 3, 4, 6, 1}));
  for (float v : lr.tensor().values()) EXPECT_NEAR(v, 0.3f, 1e-6);
  Rng rng(5);
  auto lf = random_field(2, 2, 8, 8, 1, rng);
  auto same = degrade(lf, 1);
  for (std::size_t i = 0; i < lf.tensor().size(); ++i) EXPECT_NEAR(same.tensor()[i], lf.tensor()[i], 1e-6);
  EXPECT_EQ(kind_of([&] { degrade(lf, 3); }), ErrorKind::size);
}

TEST(Degrade, EqualsPerSaiResize) {
  Rng rng(6);
  auto lf = random_field(3, 2, 16, 16, 1, rng);
  for (std::size_t r : {2u, 4u}) {
    auto lr = degrade(lf, r);
    auto up = upsample_bicubic(lr, r);
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 2; ++v) {
        Tensor<float> plane(Shape{16, 16});
        std::copy(lf.sai(u, v).begin(), lf.sai(u, v).end(), plane.data());
        auto small = bicubic_resize(plane, 1.0 / r);
        ASSERT_TRUE(std::equal(small.values().begin(), small.values().end(), lr.sai(u, v).begin()));
        auto big = bicubic_resize(small, static_cast<double>(r));
        ASSERT_TRUE(std::equal(big.values().begin(), big.values().end(), up.sai(u, v).begin()));
      }
  }
}

// --- patches ----------------------------------------------------------------

TEST(Patches, Counts) {
  LightField a(5, 5, 64, 64, 1), b(5, 5, 128, 128, 1);
  EXPECT_EQ(extract_patch_pairs(a, 2).size(), 1u);
  EXPECT_EQ(extract_patch_pairs(b, 2).size(), 4u);
  auto p = extract_patch_pairs(a, 2).front();
  EXPECT_EQ(p.lr.tensor().shape(), (Shape{5, 5, 32, 32, 1}));
  EXPECT_EQ(p.hr.tensor().shape(), (Shape{5, 5, 64, 64, 1}));
}

TEST(Patches, StitchingReproducesField) {
  Rng rng(7);
  auto hr = random_field(2, 2, 48, 32, 1, rng);
  LightField rebuilt(2, 2, 48, 32, 1, -1.f);
  for (const auto& p : extract_patch_pairs(hr, 2, 8, 8)) {
    for (std::size_t u = 0; u < 2; ++u)
      for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t y = 0; y < 16; ++y)
          for (std::size_t x = 0; x < 16; ++x)
            rebuilt.at(u, v, 2 * p.y0 + y, 2 * p.x0 + x) = p.hr.at(u, v, y, x);
    EXPECT_TRUE(same_bits(p.lr, degrade(p.hr, 2)));
  }
  EXPECT_TRUE(same_bits(rebuilt, hr));
}

// --- gathers and EPIs -------------------------------------------------------

TEST(GatherSais, ConstructedField) {
  LightField lf(5, 5, 2, 3, 1);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t v = 0; v < 5; ++v)
      for (float& x : lf.sai(u, v)) x = static_cast<float>(u * 10 + v);
  auto corners = gather_sais(lf, SaiSubset({{0, 0}, {0, 4}, {4, 0}, {4, 4}}));
  ASSERT_EQ(corners.shape(), (Shape{4, 2, 3, 1}));
  const float expect[4] = {0, 4, 40, 44};
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(corners[s * 6 + i], expect[s]);
  auto one = gather_sais(lf, SaiSubset({{2, 3}}));
  EXPECT_TRUE(std::equal(one.values().begin(), one.values().end(), lf.sai(2, 3).begin()));
  auto all = gather_sais(lf, SaiSubset::all(5, 5));
  EXPECT_TRUE(std::equal(all.values().begin(), all.values().end(), lf.tensor().values().begin()));
}

TEST(Epi, ConstantAndSingleRow) {
  LightField c(5, 5, 4, 6, 1, 0.4f);
  const auto flat = extract_epi(c, 2, 1);
  for (float v : flat.values()) EXPECT_EQ(v, 0.4f);
  Rng rng(8);
  auto lf = random_field(1, 3, 4, 6, 1, rng);
  auto epi = extract_epi(lf, 1, 2);
  ASSERT_EQ(epi.shape(), (Shape{1, 6}));
  for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(epi[x], lf.at(0, 1, 2, x));
}

TEST(Epi, ShiftEstimatorRecoversKnownShift) {
  const std::size_t n = 96;
  for (double s : {-1.5, -0.3, 0.0, 0.7, 2.0}) {
    std::vector<float> a(n), b(n);
    for (std::size_t x = 0; x < n; ++x) {
      auto f = [](double t) { return 0.5 + 0.3 * std::sin(0.21 * t) + 0.15 * std::sin(0.47 * t + 1.0); };
      a[x] = static_cast<float>(f(static_cast<double>(x)));
      b[x] = static_cast<float>(f(static_cast<double>(x) + s));
    }
    EXPECT_NEAR(estimate_row_shift(a, b, 3.0, 8, n - 8), s, 0.05);
  }
}

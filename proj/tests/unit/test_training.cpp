// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lfmdt/error.hpp"
#include "lfmdt/training.hpp"

namespace lfmdt {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::usage;
}

SceneSpec one_layer(double d, std::size_t H = 24, std::size_t W = 24) {
  SceneSpec s;
  s.U = s.V = 3;
  s.H = H;
  s.W = W;
  SceneLayer l;
  l.disparity = d;
  l.texture = random_texture(11);
  s.layers.push_back(l);
  return s;
}

// ---------------------------------------------------------------------------
// scenes

TEST(Scene, ZeroDisparityGivesIdenticalViews) {
  const LightField lf = synth_lightfield(one_layer(0.0));
  for (std::size_t u = 0; u < 3; ++u) {
    for (std::size_t v = 0; v < 3; ++v) {
      const auto a = lf.sai(u, v), b = lf.sai(1, 1);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(Scene, UnitDisparityShiftsByOnePixel) {
  const LightField lf = synth_lightfield(one_layer(1.0));
  for (std::size_t u = 0; u + 1 < 3; ++u) {
    for (std::size_t y = 0; y + 1 < 24; ++y) {
      for (std::size_t x = 0; x + 1 < 24; ++x) {
        EXPECT_NEAR(lf.at(u + 1, 1, y, x), lf.at(u, 1, y, x + 1), 1e-6);
        EXPECT_NEAR(lf.at(1, u + 1, y, x), lf.at(1, u, y + 1, x), 1e-6);
      }
    }
  }
}

TEST(Scene, TwoLayerSlopes) {
  const LightField lf = synth_lightfield(layered_scene(5, 5, 64, 64, {0.5, 2.0}, 7));
  const double back = estimate_epi_slope(extract_epi(lf, 2, 4), 3.0, 4, 60);
  const double front = estimate_epi_slope(extract_epi(lf, 2, 32), 3.0, 24, 40);
  EXPECT_NEAR(back, 0.5, 0.05);
  EXPECT_NEAR(front, 2.0, 0.05);
}

TEST(Scene, ValuesStayInRange) {
  const LightField lf = synth_lightfield(layered_scene(5, 5, 32, 32, {0.0, 1.0, 2.0}, 3));
  for (float v : lf.tensor().values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Scene, ValidateRejects) {
  auto s = one_layer(0.5);
  s.layers[0].texture[0].fx = 0.3;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::config);

  s = one_layer(0.5);
  s.layers[0].offset = 0.9;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::config);

  s = one_layer(5.0);  // 5 * 3 / 2 >= 24 / 4
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::config);

  s = one_layer(0.5);
  s.layers.clear();
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::config);

  s = one_layer(0.5);
  s.layers[0].mask = SoftRect{4, 4, 2, 8, 1};
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::config);
}

TEST(Scene, RandomTextureAmplitudes) {
  const auto t = random_texture(3, 5, 0.4, 0.1);
  ASSERT_EQ(t.size(), 5u);
  double sum = 0.0;
  for (const auto& s : t) {
    sum += s.amplitude;
    EXPECT_LE(std::hypot(s.fx, s.fy), 0.1 + 1e-12);
  }
  EXPECT_NEAR(sum, 0.4, 1e-12);
}

TEST(Scene, JsonRoundTrip) {
  SceneSpec s = layered_scene(3, 3, 24, 24, {0.25, 1.0}, 9);
  s.layers[1].mask->softness = 1.5;
  const SceneSpec back = scene_from_json(scene_to_json(s));
  EXPECT_EQ(back.U, s.U);
  EXPECT_EQ(back.H, s.H);
  ASSERT_EQ(back.layers.size(), 2u);
  EXPECT_EQ(back.layers[1].mask->softness, 1.5);
  EXPECT_EQ(synth_lightfield(back), synth_lightfield(s));
}

TEST(Scene, JsonDefaultsAndErrors) {
  const SceneSpec s = scene_from_json(
      R"({"U": 3, "V": 3, "H": 16, "W": 16, "seed": 4, "layers": [{"disparity": 0.5}]})");
  ASSERT_EQ(s.layers.size(), 1u);
  EXPECT_FALSE(s.layers[0].texture.empty());
  EXPECT_EQ(kind_of([] { scene_from_json("{"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { scene_from_json(R"({"layers": [], "colour": 1})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { scene_from_json(R"({"layers": 3})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { read_scene_spec("/nonexistent/scene.json"); }), ErrorKind::io);
}

// ---------------------------------------------------------------------------
// metrics

LightField random_field(std::uint64_t seed, std::size_t H = 16) {
  std::mt19937_64 rng(seed);
  LightField lf(2, 2, H, H, 1);
  for (auto& v : lf.tensor().values()) v = static_cast<float>(rng() % 1000) / 999.0f;
  return lf;
}

TEST(Psnr, CapAndKnownValue) {
  const LightField a = random_field(1);
  EXPECT_EQ(psnr_y(a, a), kPsnrCap);
  LightField z(2, 2, 16, 16, 1, 0.2f), o(2, 2, 16, 16, 1, 0.3f);
  EXPECT_NEAR(psnr_y(z, o), 20.0, 1e-5);
}

TEST(Psnr, SymmetricAndMonotone) {
  const LightField a = random_field(1), b = random_field(2);
  EXPECT_DOUBLE_EQ(psnr_y(a, b), psnr_y(b, a));
  std::mt19937_64 rng(3);
  double prev = kPsnrCap;
  for (float sigma : {0.01f, 0.03f, 0.1f}) {
    LightField n = a;
    std::normal_distribution<float> noise(0.0f, sigma);
    std::mt19937_64 r2(3);
    for (auto& v : n.tensor().values()) v += noise(r2);
    const double p = psnr_y(n, a);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Psnr, ShapeAndChannelErrors) {
  EXPECT_EQ(kind_of([] { psnr_y(LightField(2, 2, 4, 4, 1), LightField(2, 2, 4, 5, 1)); }),
            ErrorKind::dimension);
  EXPECT_EQ(kind_of([] { psnr_y(LightField(1, 1, 4, 4, 3), LightField(1, 1, 4, 4, 3)); }),
            ErrorKind::dimension);
}

TEST(Ssim, IdentityRangeAndInverse) {
  const LightField a = random_field(4);
  EXPECT_NEAR(ssim_y(a, a), 1.0, 1e-12);
  const double s = ssim_y(a, random_field(5));
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
  LightField inv = a;
  for (auto& v : inv.tensor().values()) v = 1.0f - v;
  EXPECT_LT(ssim_y(a, inv), 0.1);
  EXPECT_EQ(kind_of([] { ssim_y(LightField(1, 1, 8, 8, 1), LightField(1, 1, 8, 8, 1)); }),
            ErrorKind::size);
}

// ---------------------------------------------------------------------------
// Adam

TEST(Adam, ZeroGradientIsIdentity) {
  Tensor<double> x(Shape{3}, {1.0, -2.0, 0.5});
  const Tensor<double> before = x;
  AdamState st;
  for (int i = 0; i < 5; ++i) adam_step<double>({&x}, {Tensor<double>(Shape{3})}, st);
  EXPECT_EQ(x, before);
  EXPECT_EQ(st.step, 5u);
}

TEST(Adam, FirstStepMovesByLr) {
  Tensor<double> x(Shape{2}, {1.0, 1.0});
  AdamState st;
  st.lr = 0.01;
  adam_step<double>({&x}, {Tensor<double>(Shape{2}, {5.0, -3.0})}, st);
  EXPECT_NEAR(x[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(x[1], 1.0 + 0.01, 1e-9);
}

TEST(Adam, MinimisesQuadratic) {
  Tensor<double> x(Shape{1}, {0.0});
  AdamState st;
  st.lr = 0.1;
  for (int i = 0; i < 100; ++i) {
    adam_step<double>({&x}, {Tensor<double>(Shape{1}, {2.0 * (x[0] - 3.0)})}, st);
  }
  EXPECT_NEAR(x[0], 3.0, 0.1);
}

TEST(Adam, ShapeMismatch) {
  Tensor<double> x(Shape{2});
  AdamState st;
  EXPECT_EQ(kind_of([&] { adam_step<double>({&x}, {Tensor<double>(Shape{3})}, st); }),
            ErrorKind::dimension);
  EXPECT_EQ(kind_of([&] { adam_step<double>({&x}, {}, st); }), ErrorKind::dimension);
}

// ---------------------------------------------------------------------------
// training

LightField toy_scene() {
  return synth_lightfield(layered_scene(3, 3, 16, 16, {0.5, 1.0}, 2));
}

TrainConfig small_train(std::size_t steps) {
  TrainConfig t;
  t.steps = steps;
  t.patch = 8;
  t.stride = 8;
  t.lr = 1e-3;
  return t;
}

TEST(Train, ZeroStepsReturnsInit) {
  const NetworkConfig c = NetworkConfig::toy();
  const TrainResult r = train_toy(c, {toy_scene()}, small_train(0));
  EXPECT_EQ(r.params, init_params<float>(c, 0));
  EXPECT_TRUE(r.curve.empty());
  EXPECT_EQ(r.initial_loss, r.final_loss);
}

TEST(Train, Deterministic) {
  const NetworkConfig c = NetworkConfig::toy();
  const TrainResult a = train_toy(c, {toy_scene()}, small_train(6));
  const TrainResult b = train_toy(c, {toy_scene()}, small_train(6));
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(loss_curve_csv(a.curve), loss_curve_csv(b.curve));
  EXPECT_NE(a.params, init_params<float>(c, 0));
}

TEST(Train, LossDecreases) {
  const NetworkConfig c = NetworkConfig::toy();
  const TrainResult r = train_toy(c, {toy_scene()}, small_train(30));
  EXPECT_LT(r.final_loss, r.initial_loss);
}

TEST(Train, TwoPhaseSchedule) {
  TrainConfig t = small_train(5);
  t.decay_step = 3;
  t.lr_after = 1e-4;
  std::vector<std::size_t> logged;
  const TrainResult r = train_toy(NetworkConfig::toy(), {toy_scene()}, t,
                                  [&](const LossPoint& p) { logged.push_back(p.step); });
  ASSERT_EQ(r.curve.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.curve[i].lr, i < 3 ? 1e-3 : 1e-4);
  EXPECT_EQ(logged, (std::vector<std::size_t>{0, 4}));
}

TEST(Train, NonFiniteLossIsTrainingError) {
  LightField bad = toy_scene();
  bad.at(0, 0, 3, 3) = std::numeric_limits<float>::quiet_NaN();
  try {
    train_toy(NetworkConfig::toy(), {bad}, small_train(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::training);
    EXPECT_NE(std::string(e.what()).find("before step 0"), std::string::npos);
  }

  TrainConfig wild = small_train(4);
  wild.lr = 1e30;
  try {
    train_toy(NetworkConfig::toy(), {toy_scene()}, wild);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::training);
    EXPECT_NE(std::string(e.what()).find("at step 1"), std::string::npos) << e.what();
  }
}

TEST(Train, InputErrors) {
  EXPECT_EQ(kind_of([] { train_toy(NetworkConfig::toy(), {}, small_train(1)); }),
            ErrorKind::usage);
  EXPECT_EQ(kind_of([] {
              train_toy(NetworkConfig::toy(), {LightField(5, 5, 16, 16, 1)}, small_train(1));
            }),
            ErrorKind::dimension);
}

TEST(Train, LossCurveCsv) {
  const std::string csv = loss_curve_csv({{0, 0.5, 20.0, 2e-4}, {1, 0.25, 21.0, 2e-4}});
  EXPECT_EQ(csv, "step,loss,psnr,lr\n0,0.5,20,0.0002\n1,0.25,21,0.0002\n");
}

TEST(TrainConfig, SettingsRoundTrip) {
  TrainConfig t;
  EXPECT_TRUE(apply_train_setting(t, "train.steps", "42"));
  EXPECT_TRUE(apply_train_setting(t, "train.lr", "0.001"));
  EXPECT_TRUE(apply_train_setting(t, "train.decay_step", "10"));
  EXPECT_FALSE(apply_train_setting(t, "channels", "8"));
  EXPECT_EQ(t.steps, 42u);
  EXPECT_EQ(t.lr_at(9), 0.001);
  EXPECT_EQ(t.lr_at(10), t.lr_after);

  TrainConfig back;
  for (const auto& [k, v] : parse_settings(format_train_config(t))) {
    EXPECT_TRUE(apply_train_setting(back, k, v)) << k;
  }
  EXPECT_EQ(back.steps, 42u);
  EXPECT_EQ(back.lr, 0.001);
  EXPECT_EQ(back.decay_step, 10u);
}

TEST(TrainConfig, MalformedValueNamesKey) {
  TrainConfig t;
  try {
    apply_train_setting(t, "train.steps", "-3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("train.steps"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { apply_train_setting(t, "train.lr", "fast"); }), ErrorKind::config);
}

}  // namespace
}  // namespace lfmdt

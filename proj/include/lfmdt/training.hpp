// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lfmdt/lightfield.hpp"
#include "lfmdt/network.hpp"

namespace lfmdt {

// ---------------------------------------------------------------------------
// synthetic scenes

/// a * sin(2*pi*(fy*y + fx*x) + phase), frequencies in cycles per pixel.
struct Sinusoid {
  double fy = 0.0;
  double fx = 0.0;
  double phase = 0.0;
  double amplitude = 0.0;
};

/// Soft-edged rectangle [y0, y1) x [x0, x1) in the layer's own coordinates;
/// edges are logistic ramps of width `softness` pixels.
struct SoftRect {
  double y0 = 0.0;
  double x0 = 0.0;
  double y1 = 0.0;
  double x1 = 0.0;
  double softness = 1.0;
};

struct SceneLayer {
  double disparity = 0.0;  ///< pixels per angular step
  double offset = 0.5;
  std::vector<Sinusoid> texture;
  std::optional<SoftRect> mask;  ///< none: fully opaque
};

struct SceneSpec {
  std::size_t U = 5;
  std::size_t V = 5;
  std::size_t H = 64;
  std::size_t W = 64;
  std::uint64_t seed = 0;
  std::vector<SceneLayer> layers;  ///< back to front

  /// Config error unless every layer stays within [0, 1], frequencies are
  /// below 0.25 cycles/pixel and |d| * max(U, V) / 2 < min(H, W) / 4.
  void validate() const;
};

/// Random band-limited texture of `terms` sinusoids with amplitudes summing
/// to `total_amplitude`.
std::vector<Sinusoid> random_texture(std::uint64_t seed, std::size_t terms = 4,
                                     double total_amplitude = 0.45, double max_frequency = 0.2);

/// Background layer at disparities[0], then one centred rectangle per further
/// disparity, each with its own random texture.
SceneSpec layered_scene(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                        const std::vector<double>& disparities, std::uint64_t seed);

/// Parses a JSON scene. Layers without "texture" get random_texture(seed + i).
SceneSpec scene_from_json(const std::string& text);
SceneSpec read_scene_spec(const std::filesystem::path& path);
std::string scene_to_json(const SceneSpec& spec);

/// Renders SAI (u, v) with every layer evaluated at
/// (y + d (v - v_c), x + d (u - u_c)), composited back to front.
LightField synth_lightfield(const SceneSpec& spec);

// ---------------------------------------------------------------------------
// metrics on single-channel fields, values clamped to [0, 1]

inline constexpr double kPsnrCap = 100.0;

/// Mean over SAIs of 10 log10(1 / MSE), each capped at 100 dB.
double psnr_y(const LightField& pred, const LightField& target);
/// Mean over SAIs of the mean SSIM over valid 11x11 Gaussian windows.
double ssim_y(const LightField& pred, const LightField& target);

// ---------------------------------------------------------------------------
// optimisation

struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update. Moments are created on the first call.
template <typename T>
void adam_step(std::vector<Tensor<T>*> params, const std::vector<Tensor<T>>& grads,
               AdamState& state);

template <typename T>
void adam_step(ParameterStore<T>& params, const std::vector<Tensor<T>>& grads, AdamState& state);

struct TrainConfig {
  std::size_t steps = 500;
  double lr = 2e-4;
  /// From this step on the rate is `lr_after`; 0 disables the second phase.
  std::size_t decay_step = 0;
  double lr_after = 2e-5;
  std::size_t patch = 32;   ///< LR patch size
  std::size_t stride = 32;  ///< LR stride between patches
  std::size_t log_every = 25;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  double lr_at(std::size_t step) const {
    return decay_step != 0 && step >= decay_step ? lr_after : lr;
  }
};

/// Keys prefixed "train.". Returns false for keys it does not own.
bool apply_train_setting(TrainConfig& config, const std::string& key, const std::string& value);
std::string format_train_config(const TrainConfig& config);

struct LossPoint {
  std::size_t step = 0;
  double loss = 0.0;
  double psnr = 0.0;  ///< of the step's SR patch against its HR patch
  double lr = 0.0;
};

struct TrainResult {
  ParameterStore<float> params;
  std::vector<LossPoint> curve;  ///< one point per step
  double initial_loss = 0.0;     ///< mean L1 over all patches before training
  double final_loss = 0.0;       ///< mean L1 over all patches after training
};

/// Mean L1 over patch pairs for the given parameters.
double evaluate_loss(const NetworkConfig& config, const ParameterStore<float>& params,
                     const std::vector<PatchPair>& patches);

/// Trains from init_params(config, seed) on LR/HR patch pairs cut from the
/// HR scenes, one patch per step in a seeded shuffled order. Raises a
/// training error naming the step if the loss becomes non-finite.
TrainResult train_toy(const NetworkConfig& network, const std::vector<LightField>& scenes,
                      const TrainConfig& config,
                      const std::function<void(const LossPoint&)>& on_log = {});

/// step,loss,psnr,lr rows with a header.
std::string loss_curve_csv(const std::vector<LossPoint>& curve);

}  // namespace lfmdt

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfmdt/tensor.hpp"

namespace lfmdt {

/// Angular coordinate of one sub-aperture image.
struct SaiCoord {
  std::size_t u = 0;
  std::size_t v = 0;
  auto operator<=>(const SaiCoord&) const = default;
};

/// Non-empty, duplicate-free set of SAI coordinates kept sorted by (u, v).
class SaiSubset {
 public:
  explicit SaiSubset(std::vector<SaiCoord> coords);

  static SaiSubset all(std::size_t U, std::size_t V);
  /// Parses "u,v u,v ..." (separators: whitespace or ';').
  static SaiSubset parse(const std::string& text);

  const std::vector<SaiCoord>& coords() const noexcept { return coords_; }
  std::size_t size() const noexcept { return coords_.size(); }

  /// Raises an index error if any coordinate lies outside [0,U) x [0,V).
  void validate_for(std::size_t U, std::size_t V) const;
  /// Row-major SAI indices u*V + v, in subset order.
  std::vector<std::size_t> flat_indices(std::size_t U, std::size_t V) const;

  std::string to_string() const;
  bool operator==(const SaiSubset&) const = default;

 private:
  std::vector<SaiCoord> coords_;
};

/// 4-D light field with channels, stored [u][v][y][x][c] so each SAI is contiguous.
class LightField {
 public:
  LightField(std::size_t U, std::size_t V, std::size_t H, std::size_t W, std::size_t C,
             float fill = 0.0f);
  /// Takes a rank-5 [U, V, H, W, C] tensor.
  explicit LightField(Tensor<float> data);

  std::size_t U() const { return data_.extent(0); }
  std::size_t V() const { return data_.extent(1); }
  std::size_t H() const { return data_.extent(2); }
  std::size_t W() const { return data_.extent(3); }
  std::size_t C() const { return data_.extent(4); }

  float& at(std::size_t u, std::size_t v, std::size_t y, std::size_t x, std::size_t c = 0) {
    return data_[index(u, v, y, x, c)];
  }
  float at(std::size_t u, std::size_t v, std::size_t y, std::size_t x, std::size_t c = 0) const {
    return data_[index(u, v, y, x, c)];
  }

  std::span<float> sai(std::size_t u, std::size_t v);
  std::span<const float> sai(std::size_t u, std::size_t v) const;

  const Tensor<float>& tensor() const noexcept { return data_; }
  Tensor<float>& tensor() noexcept { return data_; }

  bool operator==(const LightField&) const = default;

 private:
  std::size_t index(std::size_t u, std::size_t v, std::size_t y, std::size_t x,
                    std::size_t c) const {
    return (((u * V() + v) * H() + y) * W() + x) * C() + c;
  }

  Tensor<float> data_;
};

// ---------------------------------------------------------------------------
// .lfb files: "LFB1", u32 version=1, U, V, H, W, C, then f32 payload, all
// little-endian, payload in storage order.

inline constexpr std::size_t kLfbHeaderBytes = 28;

std::vector<std::uint8_t> encode_lfb(const LightField& lf);
/// Validates magic, version and payload length. Values outside
/// [-0.001, 1.001] produce a warning; every value is clamped to [0, 1].
LightField decode_lfb(std::span<const std::uint8_t> bytes,
                      std::vector<std::string>* warnings = nullptr);

void write_lfb(const LightField& lf, const std::filesystem::path& path);
LightField read_lfb(const std::filesystem::path& path,
                    std::vector<std::string>* warnings = nullptr);

/// 8-bit PNG of one SAI (C = 1 or 3), values scaled by 255 with round-half-up.
void write_sai_png(const LightField& lf, std::size_t u, std::size_t v,
                   const std::filesystem::path& path);
/// Loads an 8-bit gray or RGB PNG as a 1x1 light field.
LightField read_sai_png(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// colour

/// BT.601 studio-swing luma: (65.481 R + 128.553 G + 24.966 B + 16) / 255.
LightField rgb_to_y(const LightField& rgb);
LightField rgb_to_ycbcr(const LightField& rgb);
LightField ycbcr_to_rgb(const LightField& ycbcr);

// ---------------------------------------------------------------------------
// bicubic resampling

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x) noexcept;

/// ceil(n * scale), tolerant to floating error in the product.
std::size_t resized_extent(std::size_t n, double scale);

/// Sampling taps for one axis: output i reads `taps` inputs starting at
/// index[i * taps] with weights weight[i * taps ...] (normalised to sum 1,
/// indices clamped to the border).
struct ResizeTaps {
  std::size_t out = 0;
  std::size_t taps = 0;
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

/// src = (dst + 0.5) / scale - 0.5; on downscale the kernel is stretched by
/// 1/scale (antialiasing).
ResizeTaps resize_taps(std::size_t in, std::size_t out, double scale);

/// Resizes a [H, W] plane. Extents below 4 raise a size error.
template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& plane, double scale);

/// Resizes every (SAI, channel) plane of a [U, V, H, W, C] tensor.
template <typename T>
Tensor<T> bicubic_resize_sais(const Tensor<T>& field, double scale);

/// Bicubic down-sampling by an integer factor r of every SAI and channel.
LightField degrade(const LightField& lf, std::size_t r);

/// Bicubic up-sampling by an integer factor r of every SAI and channel.
LightField upsample_bicubic(const LightField& lf, std::size_t r);

struct PatchPair {
  LightField lr;
  LightField hr;
  std::size_t y0 = 0;  ///< top-left in LR pixels
  std::size_t x0 = 0;
};

/// Tiles the field with HR crops of (patch * r) at LR stride `stride` and
/// degrades each crop independently.
std::vector<PatchPair> extract_patch_pairs(const LightField& hr, std::size_t r,
                                           std::size_t patch = 32, std::size_t stride = 32);

/// Crops spatial window [y0, y0+h) x [x0, x0+w) of every SAI.
LightField crop(const LightField& lf, std::size_t y0, std::size_t x0, std::size_t h,
                std::size_t w);

// ---------------------------------------------------------------------------
// angular gathers and EPIs

/// Stacks the subset's SAIs of a [U, V, H, W, C] tensor into [S, H, W, C].
template <typename T>
Tensor<T> gather_sais(const Tensor<T>& field, const SaiSubset& subset);

Tensor<float> gather_sais(const LightField& lf, const SaiSubset& subset);

/// EPI at fixed v and y: plane[u][x] = lf(u, v, y, x, 0), shape [U, W].
Tensor<float> extract_epi(const LightField& lf, std::size_t v, std::size_t y);

/// Sub-pixel shift s that maximises the normalised cross-correlation between
/// row b and row a displaced by s (b[x] ~ a[x + s]), searched over
/// [-max_shift, max_shift]. Only columns [x_begin, x_end) of b are compared.
double estimate_row_shift(std::span<const float> a, std::span<const float> b, double max_shift,
                          std::size_t x_begin = 0, std::size_t x_end = 0);

/// Mean shift between consecutive EPI rows, i.e. the EPI line slope in pixels
/// per angular step.
double estimate_epi_slope(const Tensor<float>& epi, double max_shift, std::size_t x_begin = 0,
                          std::size_t x_end = 0);

}  // namespace lfmdt

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>

#include "lfmdt/lightfield.hpp"

namespace lfmdt {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// BT.601 studio swing on [0,1] inputs; rows produce Y, Cb, Cr in 8-bit units.
constexpr Mat3 kForward = {{{65.481, 128.553, 24.966},
                            {-37.797, -74.203, 112.0},
                            {112.0, -93.786, -18.214}}};
constexpr std::array<double, 3> kOffset = {16.0, 128.0, 128.0};

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 r{};
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return r;
}

void require_three_channels(const LightField& lf, const char* what) {
  if (lf.C() != 3) {
    raise(ErrorKind::dimension,
          std::string(what) + " needs C = 3, got C = " + std::to_string(lf.C()));
  }
}

}  // namespace

LightField rgb_to_y(const LightField& rgb) {
  require_three_channels(rgb, "rgb_to_y");
  LightField out(rgb.U(), rgb.V(), rgb.H(), rgb.W(), 1);
  const float* src = rgb.tensor().data();
  float* dst = out.tensor().data();
  const std::size_t n = out.tensor().size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    dst[i] = static_cast<float>(
        (kForward[0][0] * r + kForward[0][1] * g + kForward[0][2] * b + kOffset[0]) / 255.0);
  }
  return out;
}

LightField rgb_to_ycbcr(const LightField& rgb) {
  require_three_channels(rgb, "rgb_to_ycbcr");
  LightField out(rgb.U(), rgb.V(), rgb.H(), rgb.W(), 3);
  const float* src = rgb.tensor().data();
  float* dst = out.tensor().data();
  const std::size_t n = rgb.tensor().size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      const double acc = kForward[k][0] * src[3 * i] + kForward[k][1] * src[3 * i + 1] +
                         kForward[k][2] * src[3 * i + 2] + kOffset[k];
      dst[3 * i + k] = static_cast<float>(acc / 255.0);
    }
  }
  return out;
}

LightField ycbcr_to_rgb(const LightField& ycbcr) {
  require_three_channels(ycbcr, "ycbcr_to_rgb");
  static const Mat3 inverse = invert(kForward);
  LightField out(ycbcr.U(), ycbcr.V(), ycbcr.H(), ycbcr.W(), 3);
  const float* src = ycbcr.tensor().data();
  float* dst = out.tensor().data();
  const std::size_t n = ycbcr.tensor().size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    double centred[3];
    for (int k = 0; k < 3; ++k) centred[k] = src[3 * i + k] * 255.0 - kOffset[k];
    for (int k = 0; k < 3; ++k) {
      const double v =
          inverse[k][0] * centred[0] + inverse[k][1] * centred[1] + inverse[k][2] * centred[2];
      dst[3 * i + k] = static_cast<float>(v);
    }
  }
  return out;
}

}  // namespace lfmdt

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>

#include "lfmdt/training.hpp"

namespace lfmdt {
namespace {

void require_comparable(const LightField& a, const LightField& b) {
  if (a.tensor().shape() != b.tensor().shape()) {
    raise(ErrorKind::dimension, "metric inputs differ in shape: " + to_string(a.tensor().shape()) +
                                    " vs " + to_string(b.tensor().shape()));
  }
  if (a.C() != 1) raise(ErrorKind::dimension, "metrics expect a single (Y) channel");
}

double clamp01(float v) { return std::clamp(static_cast<double>(v), 0.0, 1.0); }

constexpr int kWin = 11;

std::array<double, kWin * kWin> gaussian_window() {
  std::array<double, kWin * kWin> w{};
  double total = 0.0;
  for (int y = 0; y < kWin; ++y) {
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - kWin / 2, dx = x - kWin / 2;
      w[y * kWin + x] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
      total += w[y * kWin + x];
    }
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace

double psnr_y(const LightField& pred, const LightField& target) {
  require_comparable(pred, target);
  const std::size_t n = pred.H() * pred.W();
  double total = 0.0;
  for (std::size_t u = 0; u < pred.U(); ++u) {
    for (std::size_t v = 0; v < pred.V(); ++v) {
      const auto a = pred.sai(u, v);
      const auto b = target.sai(u, v);
      double se = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = clamp01(a[i]) - clamp01(b[i]);
        se += d * d;
      }
      const double mse = se / static_cast<double>(n);
      total += mse == 0.0 ? kPsnrCap : std::min(kPsnrCap, -10.0 * std::log10(mse));
    }
  }
  return total / static_cast<double>(pred.U() * pred.V());
}

double ssim_y(const LightField& pred, const LightField& target) {
  require_comparable(pred, target);
  const std::size_t H = pred.H(), W = pred.W();
  if (H < kWin || W < kWin) {
    raise(ErrorKind::size, "SSIM needs SAIs of at least 11x11, got " + std::to_string(H) + "x" +
                               std::to_string(W));
  }
  static const auto window = gaussian_window();
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  std::vector<double> a(H * W), b(H * W);
  double total = 0.0;
  for (std::size_t u = 0; u < pred.U(); ++u) {
    for (std::size_t v = 0; v < pred.V(); ++v) {
      const auto pa = pred.sai(u, v);
      const auto pb = target.sai(u, v);
      for (std::size_t i = 0; i < H * W; ++i) {
        a[i] = clamp01(pa[i]);
        b[i] = clamp01(pb[i]);
      }
      double sum = 0.0;
      for (std::size_t y = 0; y + kWin <= H; ++y) {
        for (std::size_t x = 0; x + kWin <= W; ++x) {
          double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
          for (int wy = 0; wy < kWin; ++wy) {
            for (int wx = 0; wx < kWin; ++wx) {
              const double g = window[wy * kWin + wx];
              const double va = a[(y + wy) * W + x + wx], vb = b[(y + wy) * W + x + wx];
              ma += g * va;
              mb += g * vb;
              saa += g * va * va;
              sbb += g * vb * vb;
              sab += g * va * vb;
            }
          }
          const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
          sum += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        }
      }
      total += sum / static_cast<double>((H - kWin + 1) * (W - kWin + 1));
    }
  }
  return total / static_cast<double>(pred.U() * pred.V());
}

}  // namespace lfmdt

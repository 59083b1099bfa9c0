// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "lfmdt/lightfield.hpp"

namespace lfmdt {

double cubic_kernel(double x) noexcept {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

std::size_t resized_extent(std::size_t n, double scale) {
  if (!(scale > 0.0)) raise(ErrorKind::usage, "resize scale must be positive");
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * scale - 1e-9));
}

ResizeTaps resize_taps(std::size_t in, std::size_t out, double scale) {
  const bool shrink = scale < 1.0;
  const double width = shrink ? 4.0 / scale : 4.0;
  ResizeTaps t;
  t.out = out;
  t.taps = static_cast<std::size_t>(std::ceil(width)) + 2;
  t.index.resize(out * t.taps);
  t.weight.resize(out * t.taps);
  const auto last = static_cast<std::ptrdiff_t>(in) - 1;
  for (std::size_t i = 0; i < out; ++i) {
    const double src = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const auto left = static_cast<std::ptrdiff_t>(std::floor(src - width / 2.0));
    double total = 0.0;
    for (std::size_t p = 0; p < t.taps; ++p) {
      const std::ptrdiff_t j = left + static_cast<std::ptrdiff_t>(p);
      const double d = src - static_cast<double>(j);
      const double w = shrink ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      t.weight[i * t.taps + p] = w;
      t.index[i * t.taps + p] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last));
      total += w;
    }
    for (std::size_t p = 0; p < t.taps; ++p) t.weight[i * t.taps + p] /= total;
  }
  return t;
}

namespace {

// Resizes an [H, W, C] image: width pass first, then height.
template <typename T>
void resize_image(const T* src, std::size_t h, std::size_t w, std::size_t c,
                  const ResizeTaps& th, const ResizeTaps& tw, T* dst) {
  const std::size_t h2 = th.out, w2 = tw.out;
  std::vector<double> tmp(h * w2 * c);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w2; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t p = 0; p < tw.taps; ++p) {
          acc += tw.weight[x * tw.taps + p] *
                 static_cast<double>(src[(y * w + tw.index[x * tw.taps + p]) * c + ch]);
        }
        tmp[(y * w2 + x) * c + ch] = acc;
      }
    }
  }
  for (std::size_t y = 0; y < h2; ++y) {
    for (std::size_t x = 0; x < w2; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t p = 0; p < th.taps; ++p) {
          acc += th.weight[y * th.taps + p] * tmp[(th.index[y * th.taps + p] * w2 + x) * c + ch];
        }
        dst[(y * w2 + x) * c + ch] = static_cast<T>(acc);
      }
    }
  }
}

void require_resizable(std::size_t h, std::size_t w) {
  if (h < 4 || w < 4) {
    raise(ErrorKind::size, "bicubic resize needs extents >= 4, got " + std::to_string(h) + "x" +
                               std::to_string(w));
  }
}

}  // namespace

template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& plane, double scale) {
  if (plane.rank() != 2) {
    raise(ErrorKind::dimension, "bicubic_resize expects an [H, W] plane, got " +
                                    to_string(plane.shape()));
  }
  const std::size_t h = plane.extent(0), w = plane.extent(1);
  require_resizable(h, w);
  const std::size_t h2 = resized_extent(h, scale), w2 = resized_extent(w, scale);
  const ResizeTaps th = resize_taps(h, h2, scale);
  const ResizeTaps tw = resize_taps(w, w2, scale);
  Tensor<T> out(Shape{h2, w2});
  resize_image(plane.data(), h, w, 1, th, tw, out.data());
  return out;
}

template <typename T>
Tensor<T> bicubic_resize_sais(const Tensor<T>& field, double scale) {
  if (field.rank() != 5) {
    raise(ErrorKind::dimension, "bicubic_resize_sais expects [U,V,H,W,C], got " +
                                    to_string(field.shape()));
  }
  const std::size_t U = field.extent(0), V = field.extent(1);
  const std::size_t h = field.extent(2), w = field.extent(3), c = field.extent(4);
  require_resizable(h, w);
  const std::size_t h2 = resized_extent(h, scale), w2 = resized_extent(w, scale);
  const ResizeTaps th = resize_taps(h, h2, scale);
  const ResizeTaps tw = resize_taps(w, w2, scale);
  Tensor<T> out(Shape{U, V, h2, w2, c});
  for (std::size_t s = 0; s < U * V; ++s) {
    resize_image(field.data() + s * h * w * c, h, w, c, th, tw, out.data() + s * h2 * w2 * c);
  }
  return out;
}

template Tensor<float> bicubic_resize(const Tensor<float>&, double);
template Tensor<double> bicubic_resize(const Tensor<double>&, double);
template Tensor<float> bicubic_resize_sais(const Tensor<float>&, double);
template Tensor<double> bicubic_resize_sais(const Tensor<double>&, double);

LightField degrade(const LightField& lf, std::size_t r) {
  if (r == 0 || lf.H() % r != 0 || lf.W() % r != 0) {
    raise(ErrorKind::size, "spatial extents " + std::to_string(lf.H()) + "x" +
                               std::to_string(lf.W()) + " not divisible by scale " +
                               std::to_string(r));
  }
  return LightField(bicubic_resize_sais(lf.tensor(), 1.0 / static_cast<double>(r)));
}

LightField upsample_bicubic(const LightField& lf, std::size_t r) {
  if (r == 0) raise(ErrorKind::usage, "upsampling factor must be >= 1");
  return LightField(bicubic_resize_sais(lf.tensor(), static_cast<double>(r)));
}

}  // namespace lfmdt

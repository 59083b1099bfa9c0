// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/lightfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lfmdt {

// ---------------------------------------------------------------------------
// SaiSubset

SaiSubset::SaiSubset(std::vector<SaiCoord> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) raise(ErrorKind::config, "SAI subset must contain at least one SAI");
  std::sort(coords_.begin(), coords_.end());
  if (std::adjacent_find(coords_.begin(), coords_.end()) != coords_.end()) {
    raise(ErrorKind::config, "SAI subset contains duplicate coordinates: " + to_string());
  }
}

SaiSubset SaiSubset::all(std::size_t U, std::size_t V) {
  std::vector<SaiCoord> c;
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t v = 0; v < V; ++v) c.push_back({u, v});
  return SaiSubset(std::move(c));
}

SaiSubset SaiSubset::parse(const std::string& text) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ';', ' ');
  std::istringstream in(cleaned);
  std::vector<SaiCoord> coords;
  std::string token;
  while (in >> token) {
    const auto comma = token.find(',');
    if (comma == std::string::npos) {
      raise(ErrorKind::config, "SAI coordinate '" + token + "' must be written as u,v");
    }
    try {
      std::size_t used_u = 0, used_v = 0;
      const std::string us = token.substr(0, comma), vs = token.substr(comma + 1);
      const unsigned long u = std::stoul(us, &used_u);
      const unsigned long v = std::stoul(vs, &used_v);
      if (used_u != us.size() || used_v != vs.size()) throw std::invalid_argument(token);
      coords.push_back({u, v});
    } catch (const std::logic_error&) {
      raise(ErrorKind::config, "SAI coordinate '" + token + "' is not a pair of integers");
    }
  }
  return SaiSubset(std::move(coords));
}

void SaiSubset::validate_for(std::size_t U, std::size_t V) const {
  for (const auto& c : coords_) {
    if (c.u >= U || c.v >= V) {
      raise(ErrorKind::index, "SAI (" + std::to_string(c.u) + "," + std::to_string(c.v) +
                                  ") outside angular grid " + std::to_string(U) + "x" +
                                  std::to_string(V));
    }
  }
}

std::vector<std::size_t> SaiSubset::flat_indices(std::size_t U, std::size_t V) const {
  validate_for(U, V);
  std::vector<std::size_t> out;
  out.reserve(coords_.size());
  for (const auto& c : coords_) out.push_back(c.u * V + c.v);
  return out;
}

std::string SaiSubset::to_string() const {
  std::string out;
  for (const auto& c : coords_) {
    if (!out.empty()) out += ' ';
    out += std::to_string(c.u) + "," + std::to_string(c.v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LightField

LightField::LightField(std::size_t U, std::size_t V, std::size_t H, std::size_t W, std::size_t C,
                       float fill)
    : data_(Shape{U, V, H, W, C}, fill) {}

LightField::LightField(Tensor<float> data) : data_(std::move(data)) {
  if (data_.rank() != 5) {
    raise(ErrorKind::dimension,
          "light field needs a [U,V,H,W,C] tensor, got " + lfmdt::to_string(data_.shape()));
  }
}

std::span<float> LightField::sai(std::size_t u, std::size_t v) {
  const std::size_t n = H() * W() * C();
  return data_.values().subspan(index(u, v, 0, 0, 0), n);
}

std::span<const float> LightField::sai(std::size_t u, std::size_t v) const {
  const std::size_t n = H() * W() * C();
  return data_.values().subspan(index(u, v, 0, 0, 0), n);
}

// ---------------------------------------------------------------------------
// patches

LightField crop(const LightField& lf, std::size_t y0, std::size_t x0, std::size_t h,
                std::size_t w) {
  if (y0 + h > lf.H() || x0 + w > lf.W()) {
    raise(ErrorKind::size, "crop window exceeds the light field");
  }
  LightField out(lf.U(), lf.V(), h, w, lf.C());
  const std::size_t C = lf.C();
  for (std::size_t u = 0; u < lf.U(); ++u)
    for (std::size_t v = 0; v < lf.V(); ++v)
      for (std::size_t y = 0; y < h; ++y) {
        const float* src = &lf.tensor()[(((u * lf.V() + v) * lf.H() + y0 + y) * lf.W() + x0) * C];
        std::copy_n(src, w * C, &out.at(u, v, y, 0, 0));
      }
  return out;
}

std::vector<PatchPair> extract_patch_pairs(const LightField& hr, std::size_t r, std::size_t patch,
                                           std::size_t stride) {
  if (r == 0 || patch == 0 || stride == 0) raise(ErrorKind::usage, "patch parameters must be > 0");
  const std::size_t hp = patch * r;
  if (hr.H() < hp || hr.W() < hp) {
    raise(ErrorKind::size, "light field " + std::to_string(hr.H()) + "x" +
                               std::to_string(hr.W()) + " is smaller than one HR patch of " +
                               std::to_string(hp));
  }
  std::vector<PatchPair> out;
  for (std::size_t y = 0; y * r + hp <= hr.H(); y += stride) {
    for (std::size_t x = 0; x * r + hp <= hr.W(); x += stride) {
      LightField hr_crop = crop(hr, y * r, x * r, hp, hp);
      LightField lr = degrade(hr_crop, r);
      out.push_back(PatchPair{std::move(lr), std::move(hr_crop), y, x});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// gathers and EPIs

template <typename T>
Tensor<T> gather_sais(const Tensor<T>& field, const SaiSubset& subset) {
  if (field.rank() != 5) {
    raise(ErrorKind::dimension, "gather_sais needs [U,V,H,W,C], got " + to_string(field.shape()));
  }
  const std::size_t U = field.extent(0), V = field.extent(1);
  const std::size_t plane = field.extent(2) * field.extent(3) * field.extent(4);
  const auto idx = subset.flat_indices(U, V);
  Tensor<T> out(Shape{idx.size(), field.extent(2), field.extent(3), field.extent(4)});
  for (std::size_t s = 0; s < idx.size(); ++s) {
    std::copy_n(field.data() + idx[s] * plane, plane, out.data() + s * plane);
  }
  return out;
}

template Tensor<float> gather_sais(const Tensor<float>&, const SaiSubset&);
template Tensor<double> gather_sais(const Tensor<double>&, const SaiSubset&);

Tensor<float> gather_sais(const LightField& lf, const SaiSubset& subset) {
  return gather_sais(lf.tensor(), subset);
}

Tensor<float> extract_epi(const LightField& lf, std::size_t v, std::size_t y) {
  if (v >= lf.V() || y >= lf.H()) {
    raise(ErrorKind::index, "EPI slice v=" + std::to_string(v) + ", y=" + std::to_string(y) +
                                " out of range");
  }
  Tensor<float> epi(Shape{lf.U(), lf.W()});
  for (std::size_t u = 0; u < lf.U(); ++u)
    for (std::size_t x = 0; x < lf.W(); ++x) epi.at({u, x}) = lf.at(u, v, y, x, 0);
  return epi;
}

namespace {

// Cubic interpolation of a row at fractional position, border clamped.
double sample_row(std::span<const float> row, double pos) {
  const double fl = std::floor(pos);
  const auto base = static_cast<std::ptrdiff_t>(fl);
  const auto last = static_cast<std::ptrdiff_t>(row.size()) - 1;
  double acc = 0.0;
  for (std::ptrdiff_t k = -1; k <= 2; ++k) {
    const std::ptrdiff_t i = std::clamp<std::ptrdiff_t>(base + k, 0, last);
    acc += cubic_kernel(pos - static_cast<double>(base + k)) * row[i];
  }
  return acc;
}

}  // namespace

double estimate_row_shift(std::span<const float> a, std::span<const float> b, double max_shift,
                          std::size_t x_begin, std::size_t x_end) {
  if (a.size() != b.size() || a.empty()) {
    raise(ErrorKind::dimension, "estimate_row_shift: rows must have equal non-zero length");
  }
  if (x_end == 0 || x_end > b.size()) x_end = b.size();
  const double n = static_cast<double>(a.size());
  double best_shift = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::ceil(max_shift / 0.01));
  for (int k = -steps; k <= steps; ++k) {
    const double s = 0.01 * k;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    std::size_t count = 0;
    for (std::size_t x = x_begin; x < x_end; ++x) {
      const double pos = static_cast<double>(x) + s;
      // Stay two samples clear of the border so no clamped tap is used.
      if (pos < 1.0 || pos > n - 3.0) continue;
      const double av = sample_row(a, pos);
      const double bv = b[x];
      sa += av;
      sb += bv;
      saa += av * av;
      sbb += bv * bv;
      sab += av * bv;
      ++count;
    }
    if (count < 4) continue;
    const double c = static_cast<double>(count);
    const double cov = sab - sa * sb / c;
    const double va = saa - sa * sa / c;
    const double vb = sbb - sb * sb / c;
    const double score = cov / std::sqrt(std::max(va * vb, 1e-300));
    if (score > best_score) {
      best_score = score;
      best_shift = s;
    }
  }
  return best_shift;
}

double estimate_epi_slope(const Tensor<float>& epi, double max_shift, std::size_t x_begin,
                          std::size_t x_end) {
  if (epi.rank() != 2) raise(ErrorKind::dimension, "EPI must be a [U, W] plane");
  const std::size_t U = epi.extent(0), W = epi.extent(1);
  if (U < 2) return 0.0;
  double total = 0.0;
  for (std::size_t u = 0; u + 1 < U; ++u) {
    std::span<const float> a(epi.data() + u * W, W);
    std::span<const float> b(epi.data() + (u + 1) * W, W);
    total += estimate_row_shift(a, b, max_shift, x_begin, x_end);
  }
  return total / static_cast<double>(U - 1);
}

}  // namespace lfmdt

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "lfmdt/training.hpp"

namespace lfmdt {

using nlohmann::json;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double mask_value(const SoftRect& r, double y, double x) {
  const double s = r.softness;
  return logistic((y - r.y0) / s) * logistic((r.y1 - y) / s) * logistic((x - r.x0) / s) *
         logistic((r.x1 - x) / s);
}

double texture_value(const SceneLayer& layer, double y, double x) {
  double v = layer.offset;
  for (const auto& s : layer.texture) {
    v += s.amplitude * std::sin(2.0 * std::numbers::pi * (s.fy * y + s.fx * x) + s.phase);
  }
  return v;
}

}  // namespace

void SceneSpec::validate() const {
  if (U == 0 || V == 0 || H == 0 || W == 0) raise(ErrorKind::config, "scene extents must be >= 1");
  if (layers.empty()) raise(ErrorKind::config, "scene needs at least one layer");
  const double reach = static_cast<double>(std::max(U, V)) / 2.0;
  const double limit = static_cast<double>(std::min(H, W)) / 4.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (!std::isfinite(l.disparity) || std::abs(l.disparity) * reach >= limit) {
      raise(ErrorKind::config, where + "disparity " + std::to_string(l.disparity) +
                                   " shifts views too far for a " + std::to_string(H) + "x" +
                                   std::to_string(W) + " field");
    }
    double amp = 0.0;
    for (const auto& s : l.texture) {
      if (!(std::abs(s.fy) < 0.25 && std::abs(s.fx) < 0.25)) {
        raise(ErrorKind::config, where + "texture frequency must stay below 0.25 cycles/pixel");
      }
      if (!std::isfinite(s.phase) || !std::isfinite(s.amplitude)) {
        raise(ErrorKind::config, where + "non-finite texture term");
      }
      amp += std::abs(s.amplitude);
    }
    if (!(l.offset - amp >= -1e-12 && l.offset + amp <= 1.0 + 1e-12)) {
      raise(ErrorKind::config, where + "offset +- total amplitude leaves [0, 1]");
    }
    if (l.mask) {
      const auto& m = *l.mask;
      if (!(m.y1 > m.y0 && m.x1 > m.x0 && m.softness > 0.0)) {
        raise(ErrorKind::config, where + "mask needs y1 > y0, x1 > x0 and softness > 0");
      }
    }
  }
}

std::vector<Sinusoid> random_texture(std::uint64_t seed, std::size_t terms,
                                     double total_amplitude, double max_frequency) {
  std::mt19937_64 rng(seed);
  std::vector<Sinusoid> out(terms);
  double weight_sum = 0.0;
  std::vector<double> weights(terms);
  for (std::size_t i = 0; i < terms; ++i) {
    const double f = uniform(rng, 0.03, max_frequency);
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    out[i].fy = f * std::sin(angle);
    out[i].fx = f * std::cos(angle);
    out[i].phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    weights[i] = uniform(rng, 0.5, 1.0);
    weight_sum += weights[i];
  }
  for (std::size_t i = 0; i < terms; ++i) {
    out[i].amplitude = total_amplitude * weights[i] / weight_sum;
  }
  return out;
}

SceneSpec layered_scene(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                        const std::vector<double>& disparities, std::uint64_t seed) {
  SceneSpec spec;
  spec.U = U;
  spec.V = V;
  spec.H = H;
  spec.W = W;
  spec.seed = seed;
  for (std::size_t i = 0; i < disparities.size(); ++i) {
    SceneLayer layer;
    layer.disparity = disparities[i];
    layer.texture = random_texture(seed + i);
    if (i > 0) {
      const double fy = 0.25 / static_cast<double>(i), fx = fy;
      const double h = static_cast<double>(H), w = static_cast<double>(W);
      layer.mask = SoftRect{h * fy, w * fx, h * (1.0 - fy), w * (1.0 - fx), 1.0};
    }
    spec.layers.push_back(std::move(layer));
  }
  spec.validate();
  return spec;
}

LightField synth_lightfield(const SceneSpec& spec) {
  spec.validate();
  LightField lf(spec.U, spec.V, spec.H, spec.W, 1);
  const double uc = (static_cast<double>(spec.U) - 1.0) / 2.0;
  const double vc = (static_cast<double>(spec.V) - 1.0) / 2.0;
  for (std::size_t u = 0; u < spec.U; ++u) {
    for (std::size_t v = 0; v < spec.V; ++v) {
      for (std::size_t y = 0; y < spec.H; ++y) {
        for (std::size_t x = 0; x < spec.W; ++x) {
          double value = 0.0;
          for (const auto& layer : spec.layers) {
            const double ys = static_cast<double>(y) + layer.disparity * (static_cast<double>(v) - vc);
            const double xs = static_cast<double>(x) + layer.disparity * (static_cast<double>(u) - uc);
            const double m = layer.mask ? mask_value(*layer.mask, ys, xs) : 1.0;
            value = value * (1.0 - m) + texture_value(layer, ys, xs) * m;
          }
          lf.at(u, v, y, x) = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
      }
    }
  }
  return lf;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) raise(ErrorKind::config, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      raise(ErrorKind::config, where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    raise(ErrorKind::config, where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

SceneSpec scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::config, std::string("scene JSON: ") + e.what());
  }
  check_keys(j, {"U", "V", "H", "W", "seed", "layers"}, "scene");
  SceneSpec spec;
  spec.U = get_or<std::size_t>(j, "U", spec.U, "scene");
  spec.V = get_or<std::size_t>(j, "V", spec.V, "scene");
  spec.H = get_or<std::size_t>(j, "H", spec.H, "scene");
  spec.W = get_or<std::size_t>(j, "W", spec.W, "scene");
  spec.seed = get_or<std::uint64_t>(j, "seed", 0, "scene");
  if (!j.contains("layers") || !j["layers"].is_array()) {
    raise(ErrorKind::config, "scene: key 'layers' must be an array");
  }
  std::size_t i = 0;
  for (const auto& jl : j["layers"]) {
    const std::string where = "layers[" + std::to_string(i) + "]";
    check_keys(jl, {"disparity", "offset", "texture", "mask"}, where);
    SceneLayer layer;
    layer.disparity = get_or<double>(jl, "disparity", 0.0, where);
    layer.offset = get_or<double>(jl, "offset", 0.5, where);
    if (jl.contains("texture")) {
      if (!jl["texture"].is_array()) raise(ErrorKind::config, where + ": 'texture' must be an array");
      for (const auto& js : jl["texture"]) {
        check_keys(js, {"fy", "fx", "phase", "amplitude"}, where + ".texture");
        layer.texture.push_back({get_or<double>(js, "fy", 0.0, where),
                                 get_or<double>(js, "fx", 0.0, where),
                                 get_or<double>(js, "phase", 0.0, where),
                                 get_or<double>(js, "amplitude", 0.0, where)});
      }
    } else {
      layer.texture = random_texture(spec.seed + i);
    }
    if (jl.contains("mask")) {
      const auto& jm = jl["mask"];
      check_keys(jm, {"y0", "x0", "y1", "x1", "softness"}, where + ".mask");
      layer.mask = SoftRect{get_or<double>(jm, "y0", 0.0, where), get_or<double>(jm, "x0", 0.0, where),
                            get_or<double>(jm, "y1", 0.0, where), get_or<double>(jm, "x1", 0.0, where),
                            get_or<double>(jm, "softness", 1.0, where)};
    }
    spec.layers.push_back(std::move(layer));
    ++i;
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::io, "cannot open scene spec " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return scene_from_json(text.str());
}

std::string scene_to_json(const SceneSpec& spec) {
  json j;
  j["U"] = spec.U;
  j["V"] = spec.V;
  j["H"] = spec.H;
  j["W"] = spec.W;
  j["seed"] = spec.seed;
  j["layers"] = json::array();
  for (const auto& l : spec.layers) {
    json jl;
    jl["disparity"] = l.disparity;
    jl["offset"] = l.offset;
    jl["texture"] = json::array();
    for (const auto& s : l.texture) {
      jl["texture"].push_back(
          {{"fy", s.fy}, {"fx", s.fx}, {"phase", s.phase}, {"amplitude", s.amplitude}});
    }
    if (l.mask) {
      jl["mask"] = {{"y0", l.mask->y0},
                    {"x0", l.mask->x0},
                    {"y1", l.mask->y1},
                    {"x1", l.mask->x1},
                    {"softness", l.mask->softness}};
    }
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2);
}

}  // namespace lfmdt

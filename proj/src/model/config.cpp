// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lfmdt/network.hpp"

namespace lfmdt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    raise(ErrorKind::config, "key '" + key + "': expected a non-negative integer, got '" + value +
                                 "'");
  }
  try {
    return std::stoul(v);
  } catch (const std::out_of_range&) {
    raise(ErrorKind::config, "key '" + key + "': value '" + value + "' out of range");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || !std::isfinite(out)) {
    raise(ErrorKind::config, "key '" + key + "': expected a real number, got '" + value + "'");
  }
  return out;
}

}  // namespace

std::vector<SaiSubset> NetworkConfig::resolved_subsets() const {
  return subsets.empty() ? default_subsets(U, V) : subsets;
}

MdtConfig NetworkConfig::mdt() const {
  MdtConfig m;
  m.branches = branches;
  m.channels = channels;
  m.disparity_dim = disparity_dim;
  m.qk_dim = qk_dim;
  m.subsets = resolved_subsets();
  return m;
}

void NetworkConfig::validate() const {
  if (U == 0 || V == 0) raise(ErrorKind::config, "angular extents must be >= 1");
  if (scale != 2 && scale != 4) {
    raise(ErrorKind::config, "scale must be 2 or 4, got " + std::to_string(scale));
  }
  if (blocks == 0) raise(ErrorKind::config, "blocks (N_a) must be >= 1");
  if (angular_qk_dim == 0 || angular_value_dim == 0) {
    raise(ErrorKind::config, "angular widths must be >= 1");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    raise(ErrorKind::config, "leaky_slope must lie in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) raise(ErrorKind::config, "layer_norm_eps must be positive");
  mdt().validate(U, V);
}

NetworkConfig NetworkConfig::toy() {
  NetworkConfig c;
  c.U = 3;
  c.V = 3;
  c.scale = 2;
  c.channels = 8;
  c.blocks = 1;
  c.branches = 2;
  c.disparity_dim = 16;
  c.qk_dim = 8;
  c.angular_qk_dim = 8;
  c.angular_value_dim = 16;
  c.subsets = {SaiSubset({{0, 0}, {0, 2}, {2, 0}, {2, 2}}), SaiSubset({{1, 1}})};
  return c;
}

bool apply_network_setting(NetworkConfig& c, const std::string& key, const std::string& value) {
  if (key == "views_u") {
    c.U = parse_count(key, value);
  } else if (key == "views_v") {
    c.V = parse_count(key, value);
  } else if (key == "scale") {
    c.scale = parse_count(key, value);
  } else if (key == "channels") {
    c.channels = parse_count(key, value);
  } else if (key == "blocks") {
    c.blocks = parse_count(key, value);
  } else if (key == "branches") {
    c.branches = parse_count(key, value);
  } else if (key == "disparity_dim") {
    c.disparity_dim = parse_count(key, value);
  } else if (key == "qk_dim") {
    c.qk_dim = parse_count(key, value);
  } else if (key == "angular_qk_dim") {
    c.angular_qk_dim = parse_count(key, value);
  } else if (key == "angular_value_dim") {
    c.angular_value_dim = parse_count(key, value);
  } else if (key == "leaky_slope") {
    c.leaky_slope = parse_real(key, value);
  } else if (key == "layer_norm_eps") {
    c.layer_norm_eps = parse_real(key, value);
  } else if (key.starts_with("subset.")) {
    const std::size_t i = parse_count(key, key.substr(7));
    SaiSubset s = [&] {
      try {
        return SaiSubset::parse(value);
      } catch (const Error& e) {
        raise(ErrorKind::config, "key '" + key + "': " + e.what());
      }
    }();
    if (i < c.subsets.size()) {
      c.subsets[i] = std::move(s);
    } else if (i == c.subsets.size()) {
      c.subsets.push_back(std::move(s));
    } else {
      raise(ErrorKind::config, "key '" + key + "': subsets must be numbered consecutively from 0");
    }
  } else {
    return false;
  }
  return true;
}

std::string format_network_config(const NetworkConfig& c) {
  std::ostringstream out;
  out << "views_u = " << c.U << '\n'
      << "views_v = " << c.V << '\n'
      << "scale = " << c.scale << '\n'
      << "channels = " << c.channels << '\n'
      << "blocks = " << c.blocks << '\n'
      << "branches = " << c.branches << '\n'
      << "disparity_dim = " << c.disparity_dim << '\n'
      << "qk_dim = " << c.qk_dim << '\n'
      << "angular_qk_dim = " << c.angular_qk_dim << '\n'
      << "angular_value_dim = " << c.angular_value_dim << '\n';
  out.precision(17);
  out << "leaky_slope = " << c.leaky_slope << '\n'
      << "layer_norm_eps = " << c.layer_norm_eps << '\n';
  const auto subsets = c.resolved_subsets();
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    out << "subset." << i << " = " << subsets[i].to_string() << '\n';
  }
  return out.str();
}

Settings parse_settings(const std::string& text) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      raise(ErrorKind::config, "line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) raise(ErrorKind::config, "line " + std::to_string(lineno) + ": empty key");
    std::string value = trim(line.substr(eq + 1));
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& kv) { return kv.first == key; });
    if (it != out.end()) {
      it->second = std::move(value);
    } else {
      out.emplace_back(std::move(key), std::move(value));
    }
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::io, "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_settings(text.str());
}

NetworkConfig network_config_from(const Settings& settings, const NetworkConfig& base) {
  NetworkConfig c = base;
  for (const auto& [key, value] : settings) {
    if (!apply_network_setting(c, key, value)) {
      raise(ErrorKind::config, "unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace lfmdt

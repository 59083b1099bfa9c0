// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lfmdt/graph.hpp"
#include "lfmdt/lightfield.hpp"
#include "lfmdt/mdt.hpp"
#include "lfmdt/tensor.hpp"

namespace lfmdt {

// ---------------------------------------------------------------------------
// configuration

struct NetworkConfig {
  std::size_t U = 5;
  std::size_t V = 5;
  std::size_t scale = 2;               ///< r, 2 or 4
  std::size_t channels = 48;           ///< C
  std::size_t blocks = 6;              ///< N_a
  std::size_t branches = 2;            ///< N_b
  std::size_t disparity_dim = 96;      ///< C_D
  std::size_t qk_dim = 48;             ///< MDT C_QK
  std::size_t angular_qk_dim = 48;     ///< angular Transformer C_QK
  std::size_t angular_value_dim = 96;  ///< angular Transformer C_V
  double leaky_slope = 0.2;
  double layer_norm_eps = 1e-5;
  /// Explicit per-branch subsets. Empty means default_subsets(U, V).
  std::vector<SaiSubset> subsets;

  std::vector<SaiSubset> resolved_subsets() const;
  MdtConfig mdt() const;
  /// Raises a config error on any inconsistency.
  void validate() const;

  /// Small configuration used for gradient checks: 3x3 views, C=8, one block.
  static NetworkConfig toy();
};

/// Applies one key=value setting. Returns false for keys it does not own;
/// raises a config error (naming the key) for malformed values.
bool apply_network_setting(NetworkConfig& config, const std::string& key,
                           const std::string& value);

/// Renders every field as key=value lines accepted by apply_network_setting.
std::string format_network_config(const NetworkConfig& config);

/// Parsed "key = value" lines ('#' starts a comment), in file order.
/// Duplicate keys keep the last value.
using Settings = std::vector<std::pair<std::string, std::string>>;
Settings parse_settings(const std::string& text);
Settings read_settings(const std::filesystem::path& path);

/// Builds a config from defaults plus settings; unknown keys are a config error.
NetworkConfig network_config_from(const Settings& settings,
                                  const NetworkConfig& base = NetworkConfig{});

// ---------------------------------------------------------------------------
// parameters

/// Named trainable arrays in insertion order.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    bool operator==(const Entry&) const = default;
  };

  void add(std::string name, Tensor<T> value);

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& name) const { return index_.contains(name); }
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;
  std::size_t position(const std::string& name) const;

  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Sum of all element counts.
  std::uint64_t total_count() const noexcept;

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  bool operator==(const ParameterStore& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Name and shape of every parameter of a configuration, in store order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const NetworkConfig& config);

/// Weights ~ U(-b, b) with b = 1/sqrt(fan_in); biases 0; layer-norm gamma 1,
/// beta 0; skip coefficients alpha 1. Bit-identical for equal seeds.
template <typename T>
ParameterStore<T> init_params(const NetworkConfig& config, std::uint64_t seed);

/// All weights and biases 0, alpha and layer-norm gamma 1.
template <typename T>
ParameterStore<T> zero_params(const NetworkConfig& config);

/// Raises a checkpoint error unless names, order and shapes match the config.
template <typename T>
void check_layout(const ParameterStore<T>& store, const NetworkConfig& config);

/// Graph leaves for every stored array.
template <typename T>
class BoundParams {
 public:
  BoundParams(Graph<T>& graph, const ParameterStore<T>& store, bool requires_grad);

  Var<T> operator[](const std::string& name) const;
  const std::vector<Var<T>>& vars() const noexcept { return vars_; }

 private:
  const ParameterStore<T>* store_;
  std::vector<Var<T>> vars_;
};

// ---------------------------------------------------------------------------
// forward passes. Inputs are [U, V, h, w, channels] graph nodes.

/// Per spatial position, a pre-norm Transformer over the U*V SAI tokens.
template <typename T>
Var<T> angular_transformer_forward(Var<T> x, const NetworkConfig& config,
                                   const BoundParams<T>& params, const std::string& prefix);

/// out = alpha * x + conv2(lrelu(conv1(AT(MDT(x))))). `dsa_outputs` receives
/// each MDT branch output when given.
template <typename T>
Var<T> correlation_block_forward(Var<T> x, const NetworkConfig& config,
                                 const BoundParams<T>& params, std::size_t block,
                                 std::vector<Var<T>>* dsa_outputs = nullptr);

/// Four 3x3 convolutions (1 -> C, then C -> C), each followed by leaky ReLU.
template <typename T>
Var<T> shallow_extract(Var<T> lr, const NetworkConfig& config, const BoundParams<T>& params);

/// conv(C+1 -> C) + lrelu on [features, lr], conv(C -> r^2), pixel shuffle,
/// plus the bicubic upsampling of lr.
template <typename T>
Var<T> reconstruct(Var<T> features, Var<T> lr, const NetworkConfig& config,
                   const BoundParams<T>& params);

/// Intermediate results kept for inspection.
template <typename T>
struct ForwardTrace {
  /// dsa[b][j]: output of branch j of block b.
  std::vector<std::vector<Var<T>>> dsa;
};

template <typename T>
Var<T> lf_mdtnet_forward(Var<T> lr, const NetworkConfig& config, const BoundParams<T>& params,
                         ForwardTrace<T>* trace = nullptr);

/// Inference without gradient bookkeeping. lr: [U, V, h, w, 1].
template <typename T>
Tensor<T> lf_mdtnet_forward(const Tensor<T>& lr, const NetworkConfig& config,
                            const ParameterStore<T>& params);

// ---------------------------------------------------------------------------
// checkpoints: "LFMW", u32 version=1, u32 count, then per entry u32 name
// length, name bytes, u32 rank, u32 extents, f32 payload; little-endian.

std::vector<std::uint8_t> encode_checkpoint(const ParameterStore<float>& store);
ParameterStore<float> decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const ParameterStore<float>& store, const std::filesystem::path& path);
ParameterStore<float> read_checkpoint(const std::filesystem::path& path);

}  // namespace lfmdt

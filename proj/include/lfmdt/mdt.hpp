// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lfmdt/graph.hpp"
#include "lfmdt/lightfield.hpp"
#include "lfmdt/tensor.hpp"

// Multi-scale Disparity Transformer.
//
// Input channels are split evenly and contiguously into one group per branch.
// Each branch runs disparity self-attention (DSA) over the H*W spatial tokens:
// queries and keys come from a compact embedding of that branch's SAI subset,
// values are the branch input itself across all SAIs. Branch outputs are
// concatenated back along the channel axis.

namespace lfmdt {

struct MdtConfig {
  std::size_t branches = 2;         ///< N_b
  std::size_t channels = 48;        ///< C
  std::size_t disparity_dim = 96;   ///< C_D, width of the disparity embedding
  std::size_t qk_dim = 48;          ///< C_QK
  std::vector<SaiSubset> subsets;   ///< one per branch

  std::size_t branch_channels() const { return channels / branches; }
  /// Raises a config error on inconsistent widths or subsets outside U x V.
  void validate(std::size_t U, std::size_t V) const;
};

/// Two branches for a 5x5 grid: the four corners and the inner diagonal ring.
/// Other geometries need explicit subsets (config error).
std::vector<SaiSubset> default_subsets(std::size_t U, std::size_t V);

/// Trainable matrices of one DSA branch. No biases.
template <typename T>
struct DsaBranchParams {
  SaiSubset subset;
  Tensor<T> disparity;  ///< [S * C/N_b, C_D]
  Tensor<T> query;      ///< [C_D, C_QK]
  Tensor<T> key;        ///< [C_D, C_QK]
};

template <typename T>
struct DsaBranchVars {
  Var<T> disparity;
  Var<T> query;
  Var<T> key;
};

/// One DSA branch on x_i: [U, V, H, W, c] -> [U, V, H, W, c].
template <typename T>
Var<T> dsa_forward(Var<T> x_i, const SaiSubset& subset, const DsaBranchVars<T>& params);

/// Full MDT on x: [U, V, H, W, C]. `outputs`, when given, receives each
/// branch's DSA result before concatenation.
template <typename T>
Var<T> mdt_forward(Var<T> x, const MdtConfig& config, const std::vector<DsaBranchVars<T>>& params,
                   std::vector<Var<T>>* outputs = nullptr);

// Tensor-in/tensor-out forms (no gradients retained).
template <typename T>
Tensor<T> dsa_forward(const Tensor<T>& x_i, const DsaBranchParams<T>& params);

template <typename T>
Tensor<T> mdt_forward(const Tensor<T>& x, const MdtConfig& config,
                      const std::vector<DsaBranchParams<T>>& params);

}  // namespace lfmdt

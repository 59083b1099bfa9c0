// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lfmdt/network.hpp"
#include "lfmdt/tensor.hpp"

// Analytic parameter and multiply-accumulate (MAC) counts. Only matmul and
// convolution products are counted; bias adds, softmax, normalisation and
// other elementwise work are excluded, matching MacCounter.

namespace lfmdt {

/// Attention cost split into the four usual parts.
struct AttentionCost {
  std::uint64_t params = 0;
  std::uint64_t projection = 0;  ///< Q/K/V (or disparity embedding) projections
  std::uint64_t qk = 0;          ///< query-key dot products
  std::uint64_t av = 0;          ///< attention times values
  std::uint64_t ffn = 0;         ///< feed-forward network
  std::uint64_t macs() const noexcept { return projection + qk + av + ffn; }
};

/// MDT over [U, V, H, W, C] with N_b branches of the given subset sizes.
/// Raises a config error if C is not divisible by N_b or a subset is empty.
AttentionCost mdt_analytic(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                           std::size_t C, std::size_t branches,
                           const std::vector<std::size_t>& subset_sizes, std::size_t disparity_dim,
                           std::size_t qk_dim);

/// One DSA branch (the per-branch term of mdt_analytic).
AttentionCost dsa_analytic(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                           std::size_t branch_channels, std::size_t subset_size,
                           std::size_t disparity_dim, std::size_t qk_dim);

/// Baseline spatial Transformer: HW tokens per SAI, the U*V SAIs as a batch,
/// C -> C projections for Q, K, V and a C -> 2C -> C feed-forward network.
AttentionCost st_baseline_analytic(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                                   std::size_t C);

struct ComplexityRow {
  std::string component;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::string formula;
};

struct RatioRow {
  std::string category;
  std::uint64_t mdt = 0;
  std::uint64_t baseline = 0;
};

struct ComplexityReport {
  std::size_t height = 0;  ///< LR spatial extent used for MAC counts
  std::size_t width = 0;
  std::vector<ComplexityRow> rows;  ///< components; the last row is the total
  std::vector<RatioRow> ratios;     ///< one MDT block vs one baseline layer
  /// MACs keyed like MacCounter scopes of lf_mdtnet_forward.
  std::map<std::string, std::uint64_t> macs_by_scope;

  std::uint64_t total_params() const;
  std::uint64_t total_macs() const;

  std::string text() const;
  /// component,params,macs,formula with a header row.
  std::string csv() const;
};

/// Exact num/den rounded half-up to three significant digits.
std::string format_ratio(std::uint64_t num, std::uint64_t den);

/// Counts for LR input of spatial size H x W.
ComplexityReport network_analytic(const NetworkConfig& config, std::size_t H, std::size_t W);

struct VerifyResult {
  bool ok = true;
  std::uint64_t analytic_total = 0;
  std::uint64_t instrumented_total = 0;
  /// One line per scope whose counts differ, first divergence first.
  std::vector<std::string> diffs;
};

/// Runs lf_mdtnet_forward on `lr` ([U, V, H, W, 1]) and compares every
/// MacCounter scope with the analytic count.
VerifyResult verify_against_instrumented(const NetworkConfig& config, const Tensor<float>& lr,
                                         const ParameterStore<float>& params);

}  // namespace lfmdt

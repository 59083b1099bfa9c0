// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/mdt.hpp"

#include <cmath>
#include <string>

#include "lfmdt/ops.hpp"

namespace lfmdt {

void MdtConfig::validate(std::size_t U, std::size_t V) const {
  if (branches == 0 || channels == 0 || disparity_dim == 0 || qk_dim == 0) {
    raise(ErrorKind::config, "MDT widths and branch count must be >= 1");
  }
  if (channels % branches != 0) {
    raise(ErrorKind::config, "channels (" + std::to_string(channels) +
                                 ") not divisible by branches (" + std::to_string(branches) + ")");
  }
  if (subsets.size() != branches) {
    raise(ErrorKind::config, "MDT has " + std::to_string(branches) + " branches but " +
                                 std::to_string(subsets.size()) + " SAI subsets");
  }
  for (const auto& s : subsets) {
    try {
      s.validate_for(U, V);
    } catch (const Error& e) {
      raise(ErrorKind::config, e.what());
    }
  }
}

std::vector<SaiSubset> default_subsets(std::size_t U, std::size_t V) {
  if (U != 5 || V != 5) {
    raise(ErrorKind::config, "no default SAI subsets for a " + std::to_string(U) + "x" +
                                 std::to_string(V) + " grid; configure subsets explicitly");
  }
  return {SaiSubset({{0, 0}, {0, 4}, {4, 0}, {4, 4}}),
          SaiSubset({{1, 1}, {1, 3}, {3, 1}, {3, 3}})};
}

template <typename T>
Var<T> dsa_forward(Var<T> x_i, const SaiSubset& subset, const DsaBranchVars<T>& params) {
  const Shape& s = x_i.shape();
  if (s.size() != 5) {
    raise(ErrorKind::dimension, "dsa_forward expects [U,V,H,W,c], got " + to_string(s));
  }
  const std::size_t U = s[0], V = s[1], H = s[2], W = s[3], c = s[4];
  const std::size_t S = subset.size(), hw = H * W;
  const Shape& sd = params.disparity.shape();
  const Shape& sq = params.query.shape();
  if (sd.size() != 2 || sd[0] != S * c || sq.size() != 2 || sq[0] != sd[1] ||
      params.key.shape() != sq) {
    raise(ErrorKind::dimension,
          "DSA parameters " + to_string(sd) + ", " + to_string(sq) + ", " +
              to_string(params.key.shape()) + " inconsistent with S=" + std::to_string(S) +
              ", c=" + std::to_string(c));
  }
  const std::size_t qk = sq[1];

  // Tokens: one per spatial position, embedding = subset SAIs x channels.
  Var<T> flat = reshape(x_i, Shape{U * V, H, W, c});
  Var<T> subset_x = gather_rows(flat, subset.flat_indices(U, V));          // [S,H,W,c]
  Var<T> tokens = reshape(permute(subset_x, {1, 2, 0, 3}), Shape{hw, S * c});

  MacCounter& macs = x_i.graph().macs();
  Var<T> q, k;
  {
    MacScope scope(macs, "projection");
    Var<T> embed = matmul(tokens, params.disparity);  // [HW, C_D]
    q = matmul(embed, params.query);                  // [HW, C_QK]
    k = matmul(embed, params.key);
  }
  Var<T> scores;
  {
    MacScope scope(macs, "qk");
    scores = scale(matmul(q, k, Transpose::yes), T(1) / std::sqrt(T(qk)));
  }
  Var<T> attn = softmax_rows(scores);  // [HW, HW]

  Var<T> values = reshape(permute(flat, {1, 2, 0, 3}), Shape{hw, U * V * c});
  Var<T> mixed;
  {
    MacScope scope(macs, "av");
    mixed = matmul(attn, values);  // [HW, UV*c]
  }
  Var<T> back = permute(reshape(mixed, Shape{H, W, U * V, c}), {2, 0, 1, 3});
  return reshape(back, Shape{U, V, H, W, c});
}

template <typename T>
Var<T> mdt_forward(Var<T> x, const MdtConfig& config, const std::vector<DsaBranchVars<T>>& params,
                   std::vector<Var<T>>* outputs) {
  const Shape& s = x.shape();
  if (s.size() != 5 || s[4] != config.channels) {
    raise(ErrorKind::dimension, "mdt_forward: input " + to_string(s) + " does not carry " +
                                    std::to_string(config.channels) + " channels");
  }
  config.validate(s[0], s[1]);
  if (params.size() != config.branches) {
    raise(ErrorKind::dimension, "mdt_forward: expected " + std::to_string(config.branches) +
                                    " branch parameter sets, got " +
                                    std::to_string(params.size()));
  }
  std::vector<Var<T>> parts = config.branches == 1 ? std::vector<Var<T>>{x}
                                                   : split_lastdim(x, config.branches);
  std::vector<Var<T>> branch_out;
  for (std::size_t i = 0; i < config.branches; ++i) {
    MacScope scope(x.graph().macs(), "branch" + std::to_string(i));
    branch_out.push_back(dsa_forward(parts[i], config.subsets[i], params[i]));
  }
  if (outputs) *outputs = branch_out;
  return config.branches == 1 ? branch_out.front() : concat_lastdim(branch_out);
}

template <typename T>
Tensor<T> dsa_forward(const Tensor<T>& x_i, const DsaBranchParams<T>& params) {
  Graph<T> g;
  DsaBranchVars<T> vars{g.constant(params.disparity), g.constant(params.query),
                        g.constant(params.key)};
  return dsa_forward(g.constant(x_i), params.subset, vars).value();
}

template <typename T>
Tensor<T> mdt_forward(const Tensor<T>& x, const MdtConfig& config,
                      const std::vector<DsaBranchParams<T>>& params) {
  Graph<T> g;
  std::vector<DsaBranchVars<T>> vars;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (i < config.subsets.size() && !(p.subset == config.subsets[i])) {
      raise(ErrorKind::config, "branch " + std::to_string(i) + " parameters were built for subset " +
                                   p.subset.to_string() + ", config has " +
                                   config.subsets[i].to_string());
    }
    vars.push_back({g.constant(p.disparity), g.constant(p.query), g.constant(p.key)});
  }
  return mdt_forward(g.constant(x), config, vars).value();
}

template Var<float> dsa_forward(Var<float>, const SaiSubset&, const DsaBranchVars<float>&);
template Var<double> dsa_forward(Var<double>, const SaiSubset&, const DsaBranchVars<double>&);
template Var<float> mdt_forward(Var<float>, const MdtConfig&,
                                const std::vector<DsaBranchVars<float>>&,
                                std::vector<Var<float>>*);
template Var<double> mdt_forward(Var<double>, const MdtConfig&,
                                 const std::vector<DsaBranchVars<double>>&,
                                 std::vector<Var<double>>*);
template Tensor<float> dsa_forward(const Tensor<float>&, const DsaBranchParams<float>&);
template Tensor<double> dsa_forward(const Tensor<double>&, const DsaBranchParams<double>&);
template Tensor<float> mdt_forward(const Tensor<float>&, const MdtConfig&,
                                   const std::vector<DsaBranchParams<float>>&);
template Tensor<double> mdt_forward(const Tensor<double>&, const MdtConfig&,
                                    const std::vector<DsaBranchParams<double>>&);

}  // namespace lfmdt

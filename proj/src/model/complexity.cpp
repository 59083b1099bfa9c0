// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/complexity.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "lfmdt/ops.hpp"

namespace lfmdt {

using u64 = std::uint64_t;

AttentionCost dsa_analytic(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                           std::size_t c, std::size_t S, std::size_t cd, std::size_t qk) {
  if (S == 0) raise(ErrorKind::config, "DSA subset must contain at least one SAI");
  const u64 hw = u64(H) * W, uv = u64(U) * V;
  AttentionCost a;
  a.params = u64(S) * c * cd + 2 * u64(cd) * qk;
  a.projection = hw * S * c * cd + 2 * hw * cd * qk;
  a.qk = hw * hw * qk;
  a.av = hw * hw * uv * c;
  return a;
}

AttentionCost mdt_analytic(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                           std::size_t C, std::size_t branches,
                           const std::vector<std::size_t>& subset_sizes, std::size_t cd,
                           std::size_t qk) {
  if (branches == 0 || C % branches != 0) {
    raise(ErrorKind::config, "channels (" + std::to_string(C) + ") not divisible by branches (" +
                                 std::to_string(branches) + ")");
  }
  if (subset_sizes.size() != branches) {
    raise(ErrorKind::config, "one subset size per branch required");
  }
  AttentionCost total;
  for (std::size_t s : subset_sizes) {
    const AttentionCost b = dsa_analytic(U, V, H, W, C / branches, s, cd, qk);
    total.params += b.params;
    total.projection += b.projection;
    total.qk += b.qk;
    total.av += b.av;
  }
  return total;
}

AttentionCost st_baseline_analytic(std::size_t U, std::size_t V, std::size_t H, std::size_t W,
                                   std::size_t C) {
  const u64 hw = u64(H) * W, uv = u64(U) * V, c = C;
  AttentionCost a;
  a.params = 3 * c * c + 4 * c * c;
  a.projection = 3 * uv * hw * c * c;
  a.qk = uv * hw * hw * c;
  a.av = uv * hw * hw * c;
  a.ffn = 4 * uv * hw * c * c;
  return a;
}

std::string format_ratio(u64 num, u64 den) {
  if (den == 0) return "n/a";
  if (num == 0) return "0";
  using u128 = unsigned __int128;
  // Find k with 100 <= num * 10^k / den < 1000 (k may be negative).
  int k = 0;
  u128 n = num, d = den;
  while (n < d * 100) {
    n *= 10;
    ++k;
  }
  while (n >= d * 1000) {
    d *= 10;
    --k;
  }
  u128 q = n / d;
  if ((n % d) * 2 >= d) ++q;
  if (q == 1000) {
    q = 100;
    --k;
  }
  // value = q * 10^-k with q in [100, 999].
  std::string digits = std::to_string(static_cast<unsigned>(q));
  const int point = 3 - k;  // digits before the decimal point
  std::string out;
  if (point <= 0) {
    out = "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
  } else if (point >= 3) {
    out = digits + std::string(static_cast<std::size_t>(point - 3), '0');
  } else {
    out = digits.substr(0, static_cast<std::size_t>(point)) + "." +
          digits.substr(static_cast<std::size_t>(point));
  }
  return out;
}

namespace {

u64 conv_params(u64 cin, u64 cout) { return 9 * cin * cout + cout; }
u64 conv_macs(u64 pixels, u64 cin, u64 cout) { return pixels * 9 * cin * cout; }

}  // namespace

ComplexityReport network_analytic(const NetworkConfig& config, std::size_t H, std::size_t W) {
  config.validate();
  if (H == 0 || W == 0) raise(ErrorKind::config, "spatial extents must be >= 1");
  const u64 C = config.channels, uv = u64(config.U) * config.V, hw = u64(H) * W;
  const u64 px = uv * hw, r2 = u64(config.scale) * config.scale;
  const u64 aqk = config.angular_qk_dim, av = config.angular_value_dim;
  const u64 Na = config.blocks;
  const auto subsets = config.resolved_subsets();

  ComplexityReport rep;
  rep.height = H;
  rep.width = W;

  // shallow
  const u64 shallow_p = conv_params(1, C) + 3 * conv_params(C, C);
  const u64 shallow_m = conv_macs(px, 1, C) + 3 * conv_macs(px, C, C);
  rep.macs_by_scope["shallow"] = shallow_m;

  // one block
  std::vector<std::size_t> sizes;
  for (const auto& s : subsets) sizes.push_back(s.size());
  const AttentionCost mdt = mdt_analytic(config.U, config.V, H, W, config.channels,
                                         config.branches, sizes, config.disparity_dim,
                                         config.qk_dim);
  const u64 ang_p = 2 * C * aqk + C * av + av * C + 4 * C + (2 * C * C + 2 * C) + (2 * C * C + C);
  const u64 ang_m = px * (2 * C * aqk + C * av + av * C + 4 * C * C) + hw * uv * uv * (aqk + av);
  const u64 conv_p = 2 * conv_params(C, C);
  const u64 conv_m = 2 * conv_macs(px, C, C);
  for (u64 b = 0; b < Na; ++b) {
    const std::string blk = "block" + std::to_string(b);
    for (std::size_t j = 0; j < subsets.size(); ++j) {
      const AttentionCost d = dsa_analytic(config.U, config.V, H, W,
                                           config.channels / config.branches, sizes[j],
                                           config.disparity_dim, config.qk_dim);
      const std::string br = blk + ".mdt.branch" + std::to_string(j);
      rep.macs_by_scope[br + ".projection"] = d.projection;
      rep.macs_by_scope[br + ".qk"] = d.qk;
      rep.macs_by_scope[br + ".av"] = d.av;
    }
    rep.macs_by_scope[blk + ".angular"] = ang_m;
    rep.macs_by_scope[blk + ".convs"] = conv_m;
  }

  // reconstruction
  const u64 rec_p = conv_params(C + 1, C) + conv_params(C, r2);
  const u64 rec_m = conv_macs(px, C + 1, C) + conv_macs(px, C, r2);
  rep.macs_by_scope["reconstruct"] = rec_m;

  const std::string n = " x N_a";
  rep.rows = {
      {"shallow (4 conv)", shallow_p, shallow_m,
       "params 9C+C + 3(9C^2+C); macs UV*HW*9*(C + 3C^2)"},
      {"mdt" + n, Na * mdt.params, Na * mdt.macs(),
       "per branch: params S*c*C_D + 2*C_D*C_QK; macs HW*S*c*C_D + 2*HW*C_D*C_QK + (HW)^2*C_QK + "
       "(HW)^2*UV*c"},
      {"angular transformer" + n, Na * ang_p, Na * ang_m,
       "params 2C*C_QK' + 2C*C_V + 4C + 4C^2 + 3C; macs UV*HW*(2C*C_QK' + 2C*C_V + 4C^2) + "
       "HW*(UV)^2*(C_QK' + C_V)"},
      {"block convs" + n, Na * conv_p, Na * conv_m, "params 2(9C^2+C); macs 2*UV*HW*9C^2"},
      {"skip alpha" + n, Na * C, 0, "params C"},
      {"reconstruction", rec_p, rec_m,
       "params 9(C+1)C+C + 9C*r^2+r^2; macs UV*HW*9*((C+1)C + C*r^2)"},
  };
  u64 tp = 0, tm = 0;
  for (const auto& row : rep.rows) {
    tp += row.params;
    tm += row.macs;
  }
  rep.rows.push_back({"total", tp, tm, ""});

  const AttentionCost st = st_baseline_analytic(config.U, config.V, H, W, config.channels);
  rep.ratios = {{"projection", mdt.projection, st.projection},
                {"qk", mdt.qk, st.qk},
                {"av", mdt.av, st.av},
                {"ffn", mdt.ffn, st.ffn},
                {"params", mdt.params, st.params}};
  return rep;
}

std::uint64_t ComplexityReport::total_params() const {
  return rows.empty() ? 0 : rows.back().params;
}

std::uint64_t ComplexityReport::total_macs() const { return rows.empty() ? 0 : rows.back().macs; }

std::string ComplexityReport::text() const {
  std::size_t wc = 9, wp = 6, wm = 4;
  for (const auto& r : rows) {
    wc = std::max(wc, r.component.size());
    wp = std::max(wp, std::to_string(r.params).size());
    wm = std::max(wm, std::to_string(r.macs).size());
  }
  std::ostringstream out;
  out << "LR input " << height << "x" << width << " per SAI\n";
  out << std::left << std::setw(int(wc)) << "component" << "  " << std::right << std::setw(int(wp))
      << "params" << "  " << std::setw(int(wm)) << "macs" << "  formula\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(int(wc)) << r.component << "  " << std::right
        << std::setw(int(wp)) << r.params << "  " << std::setw(int(wm)) << r.macs;
    if (!r.formula.empty()) out << "  " << r.formula;
    out << '\n';
  }
  out << "\nMDT vs spatial Transformer baseline (one block, same input)\n";
  std::size_t wr = 10, wa = 3, wb = 8;
  for (const auto& r : ratios) {
    wa = std::max(wa, std::to_string(r.mdt).size());
    wb = std::max(wb, std::to_string(r.baseline).size());
  }
  out << std::left << std::setw(int(wr)) << "category" << "  " << std::right << std::setw(int(wa))
      << "mdt" << "  " << std::setw(int(wb)) << "baseline" << "  ratio\n";
  for (const auto& r : ratios) {
    out << std::left << std::setw(int(wr)) << r.category << "  " << std::right
        << std::setw(int(wa)) << r.mdt << "  " << std::setw(int(wb)) << r.baseline << "  "
        << format_ratio(r.mdt, r.baseline) << '\n';
  }
  out << "published reference figures (different baseline, not comparable): "
         "projection 33%, qk 32%\n";
  return out.str();
}

std::string ComplexityReport::csv() const {
  std::ostringstream out;
  out << "component,params,macs,formula\n";
  for (const auto& r : rows) {
    out << r.component << ',' << r.params << ',' << r.macs << ",\"" << r.formula << "\"\n";
  }
  return out.str();
}

VerifyResult verify_against_instrumented(const NetworkConfig& config, const Tensor<float>& lr,
                                         const ParameterStore<float>& params) {
  if (lr.rank() != 5) raise(ErrorKind::dimension, "verify: input must be [U,V,H,W,1]");
  const ComplexityReport rep = network_analytic(config, lr.extent(2), lr.extent(3));
  Graph<float> g;
  BoundParams<float> p(g, params, false);
  lf_mdtnet_forward(g.constant(lr), config, p);

  VerifyResult res;
  res.analytic_total = rep.total_macs();
  res.instrumented_total = g.macs().total();
  std::map<std::string, std::uint64_t> keys = rep.macs_by_scope;
  for (const auto& [scope, count] : g.macs().by_scope()) keys.try_emplace(scope, 0);
  for (const auto& [scope, ignored] : keys) {
    const auto a = rep.macs_by_scope.contains(scope) ? rep.macs_by_scope.at(scope) : 0;
    const auto& inst = g.macs().by_scope();
    const auto b = inst.contains(scope) ? inst.at(scope) : 0;
    if (a != b) {
      res.diffs.push_back(scope + ": analytic " + std::to_string(a) + ", instrumented " +
                          std::to_string(b));
    }
  }
  if (res.analytic_total != res.instrumented_total) {
    res.diffs.push_back("total: analytic " + std::to_string(res.analytic_total) +
                        ", instrumented " + std::to_string(res.instrumented_total));
  }
  res.ok = res.diffs.empty();
  return res;
}

}  // namespace lfmdt

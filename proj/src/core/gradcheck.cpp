// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lfmdt {

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult finite_diff_check(const Objective& f, std::vector<Tensor<double>> params,
                                  const GradCheckOptions& options) {
  if (!(options.h > 0.0)) raise(ErrorKind::usage, "finite_diff_check: h must be positive");
  GradCheckResult result;
  if (params.empty()) return result;

  std::vector<Tensor<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.emplace_back(p.shape());
  const Evaluation base = f(params, &grads);

  std::mt19937_64 rng(options.seed);
  std::size_t total = 0;
  for (const auto& p : params) total += p.size();

  // Draw order: which array each sample comes from.
  std::vector<std::size_t> plan;
  if (options.per_array) {
    for (std::size_t a = 0; a < params.size(); ++a) {
      plan.insert(plan.end(), std::min(options.coordinates, params[a].size()), a);
    }
  } else {
    for (std::size_t a = 0; a < params.size(); ++a) plan.push_back(a);
    std::uniform_int_distribution<std::size_t> any(0, total - 1);
    while (plan.size() < options.coordinates) {
      std::size_t flat = any(rng);
      std::size_t a = 0;
      while (flat >= params[a].size()) flat -= params[a++].size();
      plan.push_back(a);
    }
  }

  const double h = options.h;
  for (std::size_t a : plan) {
    std::uniform_int_distribution<std::size_t> pick(0, params[a].size() - 1);
    while (true) {
      const std::size_t i = pick(rng);
      const double original = params[a][i];
      params[a][i] = original + h;
      const Evaluation plus = f(params, nullptr);
      params[a][i] = original - h;
      const Evaluation minus = f(params, nullptr);
      params[a][i] = original;
      const bool crossed = plus.kink_signature != base.kink_signature ||
                           minus.kink_signature != base.kink_signature;
      if (crossed && result.redrawn < options.max_redraws) {
        ++result.redrawn;
        continue;
      }
      GradCheckSample s;
      s.array = a;
      s.index = i;
      s.analytic = grads[a][i];
      s.numeric = (plus.value - minus.value) / (2.0 * h);
      s.rel_error = relative_error(s.analytic, s.numeric);
      result.max_rel_error = std::max(result.max_rel_error, s.rel_error);
      result.samples.push_back(s);
      break;
    }
  }
  return result;
}

}  // namespace lfmdt

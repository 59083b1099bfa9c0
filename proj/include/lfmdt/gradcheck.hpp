// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lfmdt/tensor.hpp"

namespace lfmdt {

/// One evaluation of a scalar objective. `kink_signature` identifies the
/// branch taken at every non-differentiable point (see Graph::kink_signature);
/// smooth objectives can leave it at 0.
struct Evaluation {
  double value = 0.0;
  std::uint64_t kink_signature = 0;
};

/// Evaluates the objective at `params`. When `grads` is non-null it must be
/// filled with the analytic gradient, one tensor per parameter array.
using Objective =
    std::function<Evaluation(const std::vector<Tensor<double>>& params,
                             std::vector<Tensor<double>>* grads)>;

struct GradCheckOptions {
  double h = 1e-3;
  /// Total sampled coordinates, or per array when `per_array` is set. In the
  /// total mode every array receives at least one coordinate.
  std::size_t coordinates = 200;
  bool per_array = false;
  std::uint64_t seed = 0;
  /// Coordinates whose +-h probe lands on a different kink branch are redrawn
  /// up to this many times in total.
  std::size_t max_redraws = 5000;
};

struct GradCheckSample {
  std::size_t array = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<GradCheckSample> samples;
  std::size_t redrawn = 0;
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric) noexcept;

/// Compares the analytic gradient with central differences (f(p+h)-f(p-h))/2h
/// on sampled coordinates and reports the worst relative error.
GradCheckResult finite_diff_check(const Objective& f, std::vector<Tensor<double>> params,
                                  const GradCheckOptions& options = {});

}  // namespace lfmdt

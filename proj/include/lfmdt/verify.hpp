// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "lfmdt/gradcheck.hpp"
#include "lfmdt/network.hpp"

namespace lfmdt {

/// Random f64 problem for an end-to-end gradient check: LR input in [0, 1],
/// HR target in [0, 1]. Weights are init_params scaled up to the bound
/// sqrt(6 / fan_in); biases, layer-norm affine terms and alpha are jittered
/// so no array sits at a special value.
struct NetworkCheckProblem {
  NetworkConfig config;
  ParameterStore<double> params;
  Tensor<double> lr;
  Tensor<double> hr;
};

NetworkCheckProblem make_check_problem(const NetworkConfig& config, std::size_t H, std::size_t W,
                                       std::uint64_t seed);

/// L1(lf_mdtnet_forward(lr), hr) as a function of every parameter array.
/// The gradient-producing call records the branch of every leaky ReLU and
/// |x|; later value-only calls replay it, so finite differences measure the
/// derivative of the smooth piece the analytic gradient belongs to.
Objective network_objective(const NetworkCheckProblem& problem);

/// finite_diff_check over all parameter arrays of the problem.
GradCheckResult network_gradcheck(const NetworkCheckProblem& problem,
                                  const GradCheckOptions& options = {});

}  // namespace lfmdt

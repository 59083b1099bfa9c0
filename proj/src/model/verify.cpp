// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/verify.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "lfmdt/ops.hpp"

namespace lfmdt {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Weight bound sqrt(6 / fan_in) instead of the training init's 1/sqrt(fan_in):
// keeps activations near unit scale through the shallow convolutions, so a
// fixed probe step is small relative to the layer-norm inputs.
const double kWeightGain = std::sqrt(6.0);

}  // namespace

NetworkCheckProblem make_check_problem(const NetworkConfig& config, std::size_t H, std::size_t W,
                                       std::uint64_t seed) {
  NetworkCheckProblem p{config, init_params<double>(config, seed),
                        Tensor<double>(Shape{config.U, config.V, H, W, 1}),
                        Tensor<double>(Shape{config.U, config.V, H * config.scale,
                                             W * config.scale, 1})};
  std::mt19937_64 rng(seed + 1);
  for (auto& e : p.params.entries()) {
    const bool affine = e.name.ends_with(".bias") || e.name.ends_with(".beta") ||
                        e.name.ends_with(".gamma") || e.name.ends_with(".alpha");
    if (!affine) {
      for (auto& v : e.value.values()) v *= kWeightGain;
      continue;
    }
    for (auto& v : e.value.values()) v += uniform(rng, -0.1, 0.1);
  }
  for (auto& v : p.lr.values()) v = uniform(rng, 0.0, 1.0);
  for (auto& v : p.hr.values()) v = uniform(rng, 0.0, 1.0);
  return p;
}

Objective network_objective(const NetworkCheckProblem& problem) {
  auto tape = std::make_shared<Graph<double>::KinkTape>();
  return [&problem, tape](const std::vector<Tensor<double>>& values,
                          std::vector<Tensor<double>>* grads) -> Evaluation {
    ParameterStore<double> store;
    const auto& entries = problem.params.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) store.add(entries[i].name, values[i]);
    Graph<double> g;
    if (grads) {
      tape->clear();
      g.record_kinks(tape.get());
    } else if (!tape->empty()) {
      g.replay_kinks(tape.get());
    }
    BoundParams<double> bound(g, store, grads != nullptr);
    Var<double> sr = lf_mdtnet_forward(g.constant(problem.lr), problem.config, bound);
    Var<double> loss = l1_loss(sr, g.constant(problem.hr));
    if (grads) {
      g.backward(loss);
      for (std::size_t i = 0; i < bound.vars().size(); ++i) (*grads)[i] = g.grad(bound.vars()[i]);
    }
    return {loss.value()[0], g.kink_signature()};
  };
}

GradCheckResult network_gradcheck(const NetworkCheckProblem& problem,
                                  const GradCheckOptions& options) {
  std::vector<Tensor<double>> values;
  for (const auto& e : problem.params.entries()) values.push_back(e.value);
  return finite_diff_check(network_objective(problem), std::move(values), options);
}

}  // namespace lfmdt

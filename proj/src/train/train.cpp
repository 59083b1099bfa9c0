// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lfmdt/ops.hpp"
#include "lfmdt/training.hpp"

namespace lfmdt {

// ---------------------------------------------------------------------------
// Adam

template <typename T>
void adam_step(std::vector<Tensor<T>*> params, const std::vector<Tensor<T>>& grads,
               AdamState& s) {
  if (params.size() != grads.size()) {
    raise(ErrorKind::dimension, "adam_step: " + std::to_string(params.size()) + " parameters but " +
                                    std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      raise(ErrorKind::dimension, "adam_step: gradient " + std::to_string(i) + " has shape " +
                                      to_string(grads[i].shape()) + ", parameter " +
                                      to_string(params[i]->shape()));
    }
  }
  if (s.m.empty()) {
    for (const auto* p : params) {
      s.m.emplace_back(p->size(), 0.0);
      s.v.emplace_back(p->size(), 0.0);
    }
  } else if (s.m.size() != params.size()) {
    raise(ErrorKind::dimension, "adam_step: optimizer state tracks a different parameter count");
  }
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    const T* g = grads[i].data();
    auto& m = s.m[i];
    auto& v = s.v[i];
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * gk;
      v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * gk * gk;
      const double mhat = m[k] / bc1, vhat = v[k] / bc2;
      p[k] = static_cast<T>(static_cast<double>(p[k]) - s.lr * mhat / (std::sqrt(vhat) + s.eps));
    }
  }
}

template <typename T>
void adam_step(ParameterStore<T>& params, const std::vector<Tensor<T>>& grads, AdamState& state) {
  std::vector<Tensor<T>*> ptrs;
  for (auto& e : params.entries()) ptrs.push_back(&e.value);
  adam_step(std::move(ptrs), grads, state);
}

template void adam_step(std::vector<Tensor<float>*>, const std::vector<Tensor<float>>&,
                        AdamState&);
template void adam_step(std::vector<Tensor<double>*>, const std::vector<Tensor<double>>&,
                        AdamState&);
template void adam_step(ParameterStore<float>&, const std::vector<Tensor<float>>&, AdamState&);
template void adam_step(ParameterStore<double>&, const std::vector<Tensor<double>>&, AdamState&);

// ---------------------------------------------------------------------------
// configuration

namespace {

std::size_t to_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    raise(ErrorKind::config, "key '" + key + "': expected a non-negative integer, got '" + value +
                                 "'");
  }
  try {
    return std::stoull(value);
  } catch (const std::out_of_range&) {
    raise(ErrorKind::config, "key '" + key + "': value out of range");
  }
}

double to_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (value.empty() || used != value.size() || !std::isfinite(out)) {
    raise(ErrorKind::config, "key '" + key + "': expected a real number, got '" + value + "'");
  }
  return out;
}

}  // namespace

bool apply_train_setting(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "train.steps") {
    c.steps = to_count(key, value);
  } else if (key == "train.lr") {
    c.lr = to_real(key, value);
  } else if (key == "train.decay_step") {
    c.decay_step = to_count(key, value);
  } else if (key == "train.lr_after") {
    c.lr_after = to_real(key, value);
  } else if (key == "train.patch") {
    c.patch = to_count(key, value);
  } else if (key == "train.stride") {
    c.stride = to_count(key, value);
  } else if (key == "train.log_every") {
    c.log_every = to_count(key, value);
  } else if (key == "train.seed") {
    c.seed = to_count(key, value);
  } else if (key == "train.beta1") {
    c.beta1 = to_real(key, value);
  } else if (key == "train.beta2") {
    c.beta2 = to_real(key, value);
  } else if (key == "train.eps") {
    c.eps = to_real(key, value);
  } else {
    return false;
  }
  return true;
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "train.steps = " << c.steps << '\n'
      << "train.lr = " << c.lr << '\n'
      << "train.decay_step = " << c.decay_step << '\n'
      << "train.lr_after = " << c.lr_after << '\n'
      << "train.patch = " << c.patch << '\n'
      << "train.stride = " << c.stride << '\n'
      << "train.log_every = " << c.log_every << '\n'
      << "train.seed = " << c.seed << '\n'
      << "train.beta1 = " << c.beta1 << '\n'
      << "train.beta2 = " << c.beta2 << '\n'
      << "train.eps = " << c.eps << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// training loop

double evaluate_loss(const NetworkConfig& config, const ParameterStore<float>& params,
                     const std::vector<PatchPair>& patches) {
  if (patches.empty()) raise(ErrorKind::usage, "no patches to evaluate");
  double total = 0.0;
  for (const auto& pair : patches) {
    const Tensor<float> sr = lf_mdtnet_forward(pair.lr.tensor(), config, params);
    double sum = 0.0;
    for (std::size_t i = 0; i < sr.size(); ++i) {
      sum += std::abs(static_cast<double>(sr[i]) - static_cast<double>(pair.hr.tensor()[i]));
    }
    total += sum / static_cast<double>(sr.size());
  }
  return total / static_cast<double>(patches.size());
}

TrainResult train_toy(const NetworkConfig& network, const std::vector<LightField>& scenes,
                      const TrainConfig& config,
                      const std::function<void(const LossPoint&)>& on_log) {
  network.validate();
  if (scenes.empty()) raise(ErrorKind::usage, "training needs at least one scene");
  std::vector<PatchPair> patches;
  for (const auto& scene : scenes) {
    if (scene.U() != network.U || scene.V() != network.V || scene.C() != 1) {
      raise(ErrorKind::dimension, "scene does not match the network's angular grid / channels");
    }
    auto p = extract_patch_pairs(scene, network.scale, config.patch, config.stride);
    std::move(p.begin(), p.end(), std::back_inserter(patches));
  }

  TrainResult result;
  result.params = init_params<float>(network, config.seed);
  try {
    result.initial_loss = evaluate_loss(network, result.params, patches);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numeric) throw;
    raise(ErrorKind::training, std::string("non-finite activations before step 0: ") + e.what());
  }
  if (!std::isfinite(result.initial_loss)) {
    raise(ErrorKind::training, "loss is non-finite before step 0");
  }

  AdamState adam;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.eps = config.eps;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(patches.size());
  std::size_t cursor = order.size();

  for (std::size_t step = 0; step < config.steps; ++step) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), 0);
      // Fisher-Yates with raw engine output keeps the order portable.
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
      cursor = 0;
    }
    const PatchPair& pair = patches[order[cursor++]];

    Graph<float> g;
    BoundParams<float> p(g, result.params, true);
    Var<float> sr, loss;
    try {
      sr = lf_mdtnet_forward(g.constant(pair.lr.tensor()), network, p);
      loss = l1_loss(sr, g.constant(pair.hr.tensor()));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;
      raise(ErrorKind::training, "non-finite activations at step " + std::to_string(step) + ": " +
                                     e.what());
    }
    const double loss_value = loss.value()[0];
    if (!std::isfinite(loss_value)) {
      raise(ErrorKind::training, "loss became non-finite at step " + std::to_string(step));
    }
    g.backward(loss);

    LossPoint point;
    point.step = step;
    point.loss = loss_value;
    point.psnr = psnr_y(LightField(sr.value()), pair.hr);
    point.lr = config.lr_at(step);
    result.curve.push_back(point);
    if (on_log && config.log_every != 0 &&
        (step % config.log_every == 0 || step + 1 == config.steps)) {
      on_log(point);
    }

    std::vector<Tensor<float>> grads;
    grads.reserve(p.vars().size());
    for (const auto& v : p.vars()) grads.push_back(g.grad(v));
    adam.lr = point.lr;
    adam_step(result.params, grads, adam);
  }
  result.final_loss = evaluate_loss(network, result.params, patches);
  return result;
}

std::string loss_curve_csv(const std::vector<LossPoint>& curve) {
  std::ostringstream out;
  out.precision(9);
  out << "step,loss,psnr,lr\n";
  for (const auto& p : curve) out << p.step << ',' << p.loss << ',' << p.psnr << ',' << p.lr << '\n';
  return out.str();
}

}  // namespace lfmdt

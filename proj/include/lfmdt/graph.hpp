// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfmdt/tensor.hpp"

namespace lfmdt {

/// Counts scalar multiply-accumulates executed by matmul and convolution
/// forward passes. Counts are also attributed to the innermost open scope
/// ("block0.mdt" etc.) so analytic and instrumented totals can be compared
/// component by component.
class MacCounter {
 public:
  void add(std::uint64_t macs);
  std::uint64_t total() const noexcept { return total_; }
  const std::map<std::string, std::uint64_t>& by_scope() const noexcept { return by_scope_; }
  void reset();

  void push_scope(const std::string& name);
  void pop_scope();
  std::string current_scope() const;

  /// Sum of per-graph counters, for graphs that ran independently.
  MacCounter& operator+=(const MacCounter& other);

 private:
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> by_scope_;
  std::vector<std::string> scopes_;
};

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode differentiation tape. Nodes are appended in creation order,
/// which is a topological order, so backward walks the tape in reverse.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = true);
  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Appends an op result. `backward` is dropped when no parent needs a gradient.
  Var<T> record(Tensor<T> value, std::vector<std::size_t> parents, BackwardFn backward);

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient buffer of a node, zero-filled on first access.
  Tensor<T>& grad_buffer(std::size_t id);
  /// Gradient of the node, or zeros if backward never reached it.
  Tensor<T> grad(Var<T> v) const;
  /// Gradient currently flowing into `self` during backward.
  const Tensor<T>& upstream(std::size_t self) const { return *nodes_.at(self).grad; }

  /// Seeds d(root)/d(root) = 1 and propagates to every node that requires grad.
  /// Gradients accumulate additively across multiple consumers.
  void backward(Var<T> root);

  MacCounter& macs() noexcept { return macs_; }
  const MacCounter& macs() const noexcept { return macs_; }

  /// Hash of the branch taken at every non-differentiable point (leaky ReLU
  /// sign, |x| sign). Finite-difference checks use it to detect kink crossings.
  std::uint64_t kink_signature() const noexcept { return kink_signature_; }

  /// Branch choices of every kinked op, one byte per element, in op order.
  using KinkTape = std::vector<std::vector<std::int8_t>>;
  /// Stores the branch choices of subsequent kinked ops in `tape`.
  void record_kinks(KinkTape* tape) noexcept {
    kink_record_ = tape;
    kink_replay_ = nullptr;
  }
  /// Makes subsequent kinked ops take the branches stored in `tape`, so a
  /// perturbed evaluation stays on the same smooth piece as the recorded one.
  void replay_kinks(const KinkTape* tape) noexcept {
    kink_replay_ = tape;
    kink_record_ = nullptr;
  }
  /// Called by kinked ops with the branches chosen from their input values.
  /// Records, replaces (replay) and hashes them into the signature.
  void resolve_kinks(std::vector<std::int8_t>& branch);

  /// Called with every softmax_rows output; used by normalisation checks.
  void set_softmax_observer(std::function<void(const Tensor<T>&)> observer) {
    softmax_observer_ = std::move(observer);
  }
  void notify_softmax(const Tensor<T>& probabilities) const {
    if (softmax_observer_) softmax_observer_(probabilities);
  }

 private:
  struct Node {
    Tensor<T> value;
    std::optional<Tensor<T>> grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  // deque: values handed out by reference stay valid as the tape grows.
  std::deque<Node> nodes_;
  MacCounter macs_;
  std::uint64_t kink_signature_ = 0xcbf29ce484222325ULL;
  KinkTape* kink_record_ = nullptr;
  const KinkTape* kink_replay_ = nullptr;
  std::size_t kink_ops_ = 0;
  std::function<void(const Tensor<T>&)> softmax_observer_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph_->value(id_);
}

/// Attributes MACs recorded while alive to `name` (nested scopes join with '.').
class MacScope {
 public:
  MacScope(MacCounter& counter, const std::string& name) : counter_(counter) {
    counter_.push_scope(name);
  }
  ~MacScope() { counter_.pop_scope(); }
  MacScope(const MacScope&) = delete;
  MacScope& operator=(const MacScope&) = delete;

 private:
  MacCounter& counter_;
};

}  // namespace lfmdt

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/graph.hpp"

namespace lfmdt {

void MacCounter::add(std::uint64_t macs) {
  total_ += macs;
  by_scope_[current_scope()] += macs;
}

void MacCounter::reset() {
  total_ = 0;
  by_scope_.clear();
}

void MacCounter::push_scope(const std::string& name) { scopes_.push_back(name); }

void MacCounter::pop_scope() {
  if (scopes_.empty()) raise(ErrorKind::usage, "MacCounter scope stack underflow");
  scopes_.pop_back();
}

std::string MacCounter::current_scope() const {
  std::string out;
  for (const auto& s : scopes_) {
    if (!out.empty()) out += '.';
    out += s;
  }
  return out;
}

MacCounter& MacCounter::operator+=(const MacCounter& other) {
  total_ += other.total_;
  for (const auto& [scope, count] : other.by_scope_) by_scope_[scope] += count;
  return *this;
}

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node node{std::move(value), std::nullopt, {}, {}, requires_grad, true};
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::record(Tensor<T> value, std::vector<std::size_t> parents, BackwardFn backward) {
  bool needs = false;
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) raise(ErrorKind::usage, "op parent does not belong to this graph");
    needs = needs || nodes_[p].requires_grad;
  }
  Node node{std::move(value), std::nullopt, std::move(parents),
            needs ? std::move(backward) : BackwardFn{}, needs, false};
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(std::size_t id) {
  Node& node = nodes_.at(id);
  if (!node.grad) node.grad.emplace(node.value.shape());
  return *node.grad;
}

template <typename T>
Tensor<T> Graph<T>::grad(Var<T> v) const {
  const Node& node = nodes_.at(v.id());
  if (node.grad) return *node.grad;
  return Tensor<T>(node.value.shape());
}

template <typename T>
void Graph<T>::backward(Var<T> root) {
  if (root.id() >= nodes_.size() || &root.graph() != this) {
    raise(ErrorKind::usage, "backward root does not belong to this graph");
  }
  Node& r = nodes_[root.id()];
  if (r.value.size() != 1) {
    raise(ErrorKind::usage,
          "backward requires a scalar root, got shape " + to_string(r.value.shape()));
  }
  grad_buffer(root.id())[0] += T(1);
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.grad || !node.backward) continue;
    node.backward(*this, id);
    // Interior gradients are no longer needed once propagated.
    if (!node.is_leaf) nodes_[id].grad.reset();
  }
}

template <typename T>
void Graph<T>::resolve_kinks(std::vector<std::int8_t>& branch) {
  const std::size_t op = kink_ops_++;
  if (kink_replay_) {
    if (op >= kink_replay_->size() || (*kink_replay_)[op].size() != branch.size()) {
      raise(ErrorKind::usage, "kink replay does not match the recorded evaluation");
    }
    branch = (*kink_replay_)[op];
  } else if (kink_record_) {
    kink_record_->push_back(branch);
  }
  std::uint64_t h = kink_signature_;
  for (std::int8_t b : branch) {
    h ^= static_cast<std::uint8_t>(b);
    h *= 0x100000001b3ULL;
  }
  kink_signature_ = h;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace lfmdt

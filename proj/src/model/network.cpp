// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/network.hpp"

#include <cmath>
#include <random>

#include "lfmdt/ops.hpp"

namespace lfmdt {

// ---------------------------------------------------------------------------
// ParameterStore

template <typename T>
void ParameterStore<T>::add(std::string name, Tensor<T> value) {
  if (index_.contains(name)) raise(ErrorKind::config, "duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value)});
}

template <typename T>
std::size_t ParameterStore<T>::position(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) raise(ErrorKind::index, "no parameter named '" + name + "'");
  return it->second;
}

template <typename T>
Tensor<T>& ParameterStore<T>::at(const std::string& name) {
  return entries_[position(name)].value;
}

template <typename T>
const Tensor<T>& ParameterStore<T>::at(const std::string& name) const {
  return entries_[position(name)].value;
}

template <typename T>
std::uint64_t ParameterStore<T>::total_count() const noexcept {
  std::uint64_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template class ParameterStore<float>;
template class ParameterStore<double>;

// ---------------------------------------------------------------------------
// layout and initialisation

std::vector<std::pair<std::string, Shape>> parameter_layout(const NetworkConfig& config) {
  config.validate();
  const std::size_t C = config.channels, r2 = config.scale * config.scale;
  const std::size_t c = config.channels / config.branches;
  const std::size_t cd = config.disparity_dim, qk = config.qk_dim;
  const std::size_t aqk = config.angular_qk_dim, av = config.angular_value_dim;
  const auto subsets = config.resolved_subsets();

  std::vector<std::pair<std::string, Shape>> out;
  auto conv = [&](const std::string& name, std::size_t cin, std::size_t cout) {
    out.emplace_back(name + ".weight", Shape{cout, cin, 3, 3});
    out.emplace_back(name + ".bias", Shape{cout});
  };
  for (std::size_t i = 0; i < 4; ++i) conv("shallow.conv" + std::to_string(i), i == 0 ? 1 : C, C);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    for (std::size_t j = 0; j < config.branches; ++j) {
      const std::string m = p + "mdt.branch" + std::to_string(j) + ".";
      out.emplace_back(m + "disparity", Shape{subsets[j].size() * c, cd});
      out.emplace_back(m + "query", Shape{cd, qk});
      out.emplace_back(m + "key", Shape{cd, qk});
    }
    const std::string a = p + "angular.";
    out.emplace_back(a + "norm1.gamma", Shape{C});
    out.emplace_back(a + "norm1.beta", Shape{C});
    out.emplace_back(a + "query", Shape{C, aqk});
    out.emplace_back(a + "key", Shape{C, aqk});
    out.emplace_back(a + "value", Shape{C, av});
    out.emplace_back(a + "out", Shape{av, C});
    out.emplace_back(a + "norm2.gamma", Shape{C});
    out.emplace_back(a + "norm2.beta", Shape{C});
    out.emplace_back(a + "ffn1.weight", Shape{C, 2 * C});
    out.emplace_back(a + "ffn1.bias", Shape{2 * C});
    out.emplace_back(a + "ffn2.weight", Shape{2 * C, C});
    out.emplace_back(a + "ffn2.bias", Shape{C});
    conv(p + "conv1", C, C);
    conv(p + "conv2", C, C);
    out.emplace_back(p + "alpha", Shape{C});
  }
  conv("reconstruct.fuse", C + 1, C);
  conv("reconstruct.expand", C, r2);
  return out;
}

namespace {

enum class Role { weight, zero, one };

Role role_of(const std::string& name) {
  if (name.ends_with(".bias") || name.ends_with(".beta")) return Role::zero;
  if (name.ends_with(".gamma") || name.ends_with(".alpha")) {
    return Role::one;
  }
  return Role::weight;
}

std::size_t fan_in(const Shape& s) { return s.size() == 4 ? s[1] * s[2] * s[3] : s[0]; }

}  // namespace

template <typename T>
ParameterStore<T> init_params(const NetworkConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterStore<T> store;
  for (auto& [name, shape] : parameter_layout(config)) {
    Tensor<T> t(shape);
    switch (role_of(name)) {
      case Role::zero:
        break;
      case Role::one:
        t.fill(T(1));
        break;
      case Role::weight: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(shape)));
        for (auto& v : t.values()) {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          v = static_cast<T>((2.0 * u - 1.0) * bound);
        }
        break;
      }
    }
    store.add(name, std::move(t));
  }
  return store;
}

template <typename T>
ParameterStore<T> zero_params(const NetworkConfig& config) {
  ParameterStore<T> store;
  for (auto& [name, shape] : parameter_layout(config)) {
    store.add(name, Tensor<T>(shape, role_of(name) == Role::one ? T(1) : T(0)));
  }
  return store;
}

template <typename T>
void check_layout(const ParameterStore<T>& store, const NetworkConfig& config) {
  const auto layout = parameter_layout(config);
  if (layout.size() != store.size()) {
    raise(ErrorKind::checkpoint, "checkpoint holds " + std::to_string(store.size()) +
                                     " arrays, config needs " + std::to_string(layout.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& e = store.entries()[i];
    if (e.name != layout[i].first) {
      raise(ErrorKind::checkpoint, "array " + std::to_string(i) + " is '" + e.name +
                                       "', config expects '" + layout[i].first + "'");
    }
    if (e.value.shape() != layout[i].second) {
      raise(ErrorKind::checkpoint, "array '" + e.name + "' has shape " +
                                       to_string(e.value.shape()) + ", config expects " +
                                       to_string(layout[i].second));
    }
  }
}

template ParameterStore<float> init_params(const NetworkConfig&, std::uint64_t);
template ParameterStore<double> init_params(const NetworkConfig&, std::uint64_t);
template ParameterStore<float> zero_params(const NetworkConfig&);
template ParameterStore<double> zero_params(const NetworkConfig&);
template void check_layout(const ParameterStore<float>&, const NetworkConfig&);
template void check_layout(const ParameterStore<double>&, const NetworkConfig&);

// ---------------------------------------------------------------------------
// BoundParams

template <typename T>
BoundParams<T>::BoundParams(Graph<T>& graph, const ParameterStore<T>& store, bool requires_grad)
    : store_(&store) {
  vars_.reserve(store.size());
  for (const auto& e : store.entries()) vars_.push_back(graph.leaf(e.value, requires_grad));
}

template <typename T>
Var<T> BoundParams<T>::operator[](const std::string& name) const {
  return vars_[store_->position(name)];
}

template class BoundParams<float>;
template class BoundParams<double>;

// ---------------------------------------------------------------------------
// forward

namespace {

template <typename T>
Var<T> conv(Var<T> x, const BoundParams<T>& p, const std::string& name) {
  return conv2d_same(x, p[name + ".weight"], p[name + ".bias"]);
}

}  // namespace

template <typename T>
Var<T> angular_transformer_forward(Var<T> x, const NetworkConfig& config,
                                   const BoundParams<T>& p, const std::string& prefix) {
  const Shape s = x.shape();
  if (s.size() != 5 || s[4] != config.channels) {
    raise(ErrorKind::dimension, "angular transformer: bad input " + to_string(s));
  }
  const std::size_t U = s[0], V = s[1], H = s[2], W = s[3], C = s[4];
  const std::size_t n = U * V, hw = H * W;
  const std::size_t qk = config.angular_qk_dim, cv = config.angular_value_dim;
  const T eps = static_cast<T>(config.layer_norm_eps);

  Var<T> tokens = reshape(permute(x, {2, 3, 0, 1, 4}), Shape{hw * n, C});
  Var<T> h = layer_norm_lastdim(tokens, p[prefix + "norm1.gamma"], p[prefix + "norm1.beta"], eps);
  Var<T> q = reshape(matmul(h, p[prefix + "query"]), Shape{hw, n, qk});
  Var<T> k = reshape(matmul(h, p[prefix + "key"]), Shape{hw, n, qk});
  Var<T> v = reshape(matmul(h, p[prefix + "value"]), Shape{hw, n, cv});
  Var<T> attn =
      softmax_rows(scale(matmul(q, k, Transpose::yes), T(1) / std::sqrt(static_cast<T>(qk))));
  Var<T> ctx = reshape(matmul(attn, v), Shape{hw * n, cv});
  Var<T> t = add(tokens, matmul(ctx, p[prefix + "out"]));

  Var<T> h2 = layer_norm_lastdim(t, p[prefix + "norm2.gamma"], p[prefix + "norm2.beta"], eps);
  Var<T> f = gelu(add_bias(matmul(h2, p[prefix + "ffn1.weight"]), p[prefix + "ffn1.bias"]));
  f = add_bias(matmul(f, p[prefix + "ffn2.weight"]), p[prefix + "ffn2.bias"]);
  Var<T> out = add(t, f);
  return permute(reshape(out, Shape{H, W, U, V, C}), {2, 3, 0, 1, 4});
}

template <typename T>
Var<T> correlation_block_forward(Var<T> x, const NetworkConfig& config, const BoundParams<T>& p,
                                 std::size_t block, std::vector<Var<T>>* dsa_outputs) {
  const std::string name = "block" + std::to_string(block);
  const std::string prefix = name + ".";
  MacCounter& macs = x.graph().macs();
  MacScope block_scope(macs, name);
  const T slope = static_cast<T>(config.leaky_slope);

  Var<T> y;
  {
    MacScope scope(macs, "mdt");
    std::vector<DsaBranchVars<T>> branches;
    for (std::size_t j = 0; j < config.branches; ++j) {
      const std::string m = prefix + "mdt.branch" + std::to_string(j) + ".";
      branches.push_back({p[m + "disparity"], p[m + "query"], p[m + "key"]});
    }
    y = mdt_forward(x, config.mdt(), branches, dsa_outputs);
  }
  {
    MacScope scope(macs, "angular");
    y = angular_transformer_forward(y, config, p, prefix + "angular.");
  }
  {
    MacScope scope(macs, "convs");
    y = conv(leaky_relu(conv(y, p, prefix + "conv1"), slope), p, prefix + "conv2");
  }
  return add(scale_channels(x, p[prefix + "alpha"]), y);
}

template <typename T>
Var<T> shallow_extract(Var<T> lr, const NetworkConfig& config, const BoundParams<T>& p) {
  MacScope scope(lr.graph().macs(), "shallow");
  const T slope = static_cast<T>(config.leaky_slope);
  Var<T> x = lr;
  for (std::size_t i = 0; i < 4; ++i) {
    x = leaky_relu(conv(x, p, "shallow.conv" + std::to_string(i)), slope);
  }
  return x;
}

template <typename T>
Var<T> reconstruct(Var<T> features, Var<T> lr, const NetworkConfig& config,
                   const BoundParams<T>& p) {
  Graph<T>& g = lr.graph();
  MacScope scope(g.macs(), "reconstruct");
  const T slope = static_cast<T>(config.leaky_slope);
  Var<T> fused = leaky_relu(conv(concat_lastdim(std::vector<Var<T>>{features, lr}), p,
                                 "reconstruct.fuse"),
                            slope);
  Var<T> residual = pixel_shuffle(conv(fused, p, "reconstruct.expand"), config.scale);
  Var<T> skip =
      g.constant(bicubic_resize_sais(lr.value(), static_cast<double>(config.scale)));
  return add(residual, skip);
}

template <typename T>
Var<T> lf_mdtnet_forward(Var<T> lr, const NetworkConfig& config, const BoundParams<T>& p,
                         ForwardTrace<T>* trace) {
  const Shape& s = lr.shape();
  if (s.size() != 5 || s[0] != config.U || s[1] != config.V || s[4] != 1) {
    raise(ErrorKind::dimension, "network input must be [" + std::to_string(config.U) + "," +
                                    std::to_string(config.V) + ",h,w,1], got " + to_string(s));
  }
  if (trace) trace->dsa.assign(config.blocks, {});
  Var<T> f = shallow_extract(lr, config, p);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    f = correlation_block_forward(f, config, p, b, trace ? &trace->dsa[b] : nullptr);
  }
  return reconstruct(f, lr, config, p);
}

template <typename T>
Tensor<T> lf_mdtnet_forward(const Tensor<T>& lr, const NetworkConfig& config,
                            const ParameterStore<T>& params) {
  Graph<T> g;
  BoundParams<T> p(g, params, false);
  return lf_mdtnet_forward(g.constant(lr), config, p).value();
}

#define LFMDT_INSTANTIATE_NETWORK(T)                                                         \
  template Var<T> angular_transformer_forward(Var<T>, const NetworkConfig&,                   \
                                              const BoundParams<T>&, const std::string&);     \
  template Var<T> correlation_block_forward(Var<T>, const NetworkConfig&,                     \
                                            const BoundParams<T>&, std::size_t,               \
                                            std::vector<Var<T>>*);                            \
  template Var<T> shallow_extract(Var<T>, const NetworkConfig&, const BoundParams<T>&);       \
  template Var<T> reconstruct(Var<T>, Var<T>, const NetworkConfig&, const BoundParams<T>&);   \
  template Var<T> lf_mdtnet_forward(Var<T>, const NetworkConfig&, const BoundParams<T>&,      \
                                    ForwardTrace<T>*);                                        \
  template Tensor<T> lf_mdtnet_forward(const Tensor<T>&, const NetworkConfig&,                \
                                       const ParameterStore<T>&);

LFMDT_INSTANTIATE_NETWORK(float)
LFMDT_INSTANTIATE_NETWORK(double)

#undef LFMDT_INSTANTIATE_NETWORK

}  // namespace lfmdt

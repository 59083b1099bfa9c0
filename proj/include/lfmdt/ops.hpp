// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lfmdt/graph.hpp"
#include "lfmdt/tensor.hpp"

// Differentiable operations over Graph nodes. No broadcasting beyond a scalar
// factor and a per-channel vector applied along the last axis.

namespace lfmdt {

enum class Transpose { no, yes };

/// [m,k]x[k,n] -> [m,n], or batched [b,m,k]x[b,k,n] -> [b,m,n].
/// With Transpose::yes the right operand is stored as [n,k] ([b,n,k]).
/// Adds b*m*k*n to the graph's MacCounter.
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, Transpose transpose_b = Transpose::no);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> x, T factor);

/// x[..., c] + bias[c]
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias);

/// x[..., c] * alpha[c]
template <typename T>
Var<T> scale_channels(Var<T> x, Var<T> alpha);

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope);

/// Exact GELU, x * Phi(x).
template <typename T>
Var<T> gelu(Var<T> x);

/// Normalises each last-axis vector to zero mean / unit (biased) variance,
/// then applies gamma and beta.
template <typename T>
Var<T> layer_norm_lastdim(Var<T> x, Var<T> gamma, Var<T> beta, T eps);

/// Softmax over the last axis with per-row max subtraction. Non-finite input
/// raises a numeric error.
template <typename T>
Var<T> softmax_rows(Var<T> x);

template <typename T>
Var<T> concat_lastdim(const std::vector<Var<T>>& parts);

/// Channels [begin, end) of the last axis.
template <typename T>
Var<T> slice_lastdim(Var<T> x, std::size_t begin, std::size_t end);

/// Even split of the last axis into `parts` contiguous pieces.
template <typename T>
std::vector<Var<T>> split_lastdim(Var<T> x, std::size_t parts);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

template <typename T>
Var<T> permute(Var<T> x, const std::vector<std::size_t>& axes);

/// Selects entries of axis 0 in the given order.
template <typename T>
Var<T> gather_rows(Var<T> x, const std::vector<std::size_t>& indices);

/// 3x3 cross-correlation with zero padding 1, channel-last layout.
/// x: [..., H, W, C_in] (leading axes are batch), w: [C_out, C_in, 3, 3],
/// bias: [C_out]. Adds batch*C_out*C_in*9*H*W MACs.
template <typename T>
Var<T> conv2d_same(Var<T> x, Var<T> w, Var<T> bias);

/// [..., H, W, r*r*C] -> [..., r*H, r*W, C] with
/// out[r*y+dy, r*x+dx, c] = in[y, x, c*r*r + dy*r + dx].
template <typename T>
Var<T> pixel_shuffle(Var<T> x, std::size_t r);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);

/// mean |pred - target|; subgradient 0 at ties.
template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target);

// Plain tensor counterparts.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t r);
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t r);

}  // namespace lfmdt

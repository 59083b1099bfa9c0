// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/tensor.hpp"

#include <numeric>

namespace lfmdt {

std::size_t num_elements(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  const std::size_t rank = x.rank();
  if (axes.size() != rank) {
    raise(ErrorKind::dimension, "permutation of rank " + std::to_string(axes.size()) +
                                    " applied to shape " + to_string(x.shape()));
  }
  std::vector<bool> seen(rank, false);
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (axes[i] >= rank || seen[axes[i]]) {
      raise(ErrorKind::dimension, "invalid axis permutation for shape " + to_string(x.shape()));
    }
    seen[axes[i]] = true;
    out_shape[i] = x.shape()[axes[i]];
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) in_strides[i - 1] = in_strides[i] * x.shape()[i];
  // Stride in the input for each output axis.
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) step[i] = in_strides[axes[i]];

  Tensor<T> out(out_shape);
  std::vector<std::size_t> idx(rank, 0);
  const T* src = x.data();
  T* dst = out.data();
  const std::size_t n = out.size();
  const std::size_t inner = out_shape[rank - 1];
  const std::size_t inner_step = step[rank - 1];
  std::size_t base = 0;
  for (std::size_t flat = 0; flat < n; flat += inner) {
    for (std::size_t j = 0; j < inner; ++j) dst[flat + j] = src[base + j * inner_step];
    // Advance the multi-index over all axes but the last.
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      if (++idx[ax] < out_shape[ax]) {
        base += step[ax];
        break;
      }
      base -= step[ax] * (out_shape[ax] - 1);
      idx[ax] = 0;
    }
  }
  return out;
}

template <typename T>
void transpose_into(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kTile) {
    const std::size_t i1 = std::min(rows, i0 + kTile);
    for (std::size_t j0 = 0; j0 < cols; j0 += kTile) {
      const std::size_t j1 = std::min(cols, j0 + kTile);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

template Tensor<float> permute(const Tensor<float>&, const std::vector<std::size_t>&);
template Tensor<double> permute(const Tensor<double>&, const std::vector<std::size_t>&);
template void transpose_into(const float*, std::size_t, std::size_t, float*);
template void transpose_into(const double*, std::size_t, std::size_t, double*);

}  // namespace lfmdt

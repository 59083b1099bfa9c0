// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "lfmdt/error.hpp"

namespace lfmdt {

using Shape = std::vector<std::size_t>;

enum class DType { f32, f64 };

template <typename T>
inline constexpr DType dtype_of = std::is_same_v<T, float> ? DType::f32 : DType::f64;

std::size_t num_elements(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

/// Dense row-major tensor, last axis fastest. Owns its buffer; copies are deep.
template <typename T>
class Tensor {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "Tensor supports f32 and f64 only");

 public:
  using value_type = T;

  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(num_elements(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    validate_shape();
    if (data_.size() != num_elements(shape_)) {
      raise(ErrorKind::dimension, "buffer of " + std::to_string(data_.size()) +
                                      " values does not fill shape " + to_string(shape_));
    }
  }

  static Tensor scalar(T value) { return Tensor(Shape{1}, value); }

  static constexpr DType dtype() noexcept { return dtype_of<T>; }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Row-major flat offset of a full multi-index.
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) {
      raise(ErrorKind::index, "index rank " + std::to_string(index.size()) +
                                  " does not match tensor rank " + std::to_string(rank()));
    }
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      if (i >= shape_[axis]) {
        raise(ErrorKind::index, "index " + std::to_string(i) + " out of range on axis " +
                                    std::to_string(axis) + " of " + to_string(shape_));
      }
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  T& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Tensor& other) const = default;

 private:
  void validate_shape() const {
    if (shape_.empty()) raise(ErrorKind::dimension, "tensor shape must have rank >= 1");
    for (std::size_t e : shape_) {
      if (e == 0) raise(ErrorKind::dimension, "zero extent in shape " + to_string(shape_));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

/// Axis permutation with explicit copy: out.shape[i] = in.shape[axes[i]].
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes);

/// Transpose of a row-major [rows x cols] block into [cols x rows].
template <typename T>
void transpose_into(const T* src, std::size_t rows, std::size_t cols, T* dst);

}  // namespace lfmdt

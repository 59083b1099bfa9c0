// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lfmdt {

enum class ErrorKind {
  dimension,
  numeric,
  usage,
  format,
  length,
  size,
  index,
  config,
  checkpoint,
  io,
  training,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind is stable
/// and is what the CLI prints as the machine-readable error tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace lfmdt

// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/error.hpp"

namespace lfmdt {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension:
      return "dimension";
    case ErrorKind::numeric:
      return "numeric";
    case ErrorKind::usage:
      return "usage";
    case ErrorKind::format:
      return "format";
    case ErrorKind::length:
      return "length";
    case ErrorKind::size:
      return "size";
    case ErrorKind::index:
      return "index";
    case ErrorKind::config:
      return "config";
    case ErrorKind::checkpoint:
      return "checkpoint";
    case ErrorKind::io:
      return "io";
    case ErrorKind::training:
      return "training";
  }
  return "unknown";
}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace lfmdt

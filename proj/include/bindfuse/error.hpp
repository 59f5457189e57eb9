// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bindfuse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input text or records violate a format or a record invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf reached a loss or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline std::function<void(std::string_view)>& warning_handler() {
  static std::function<void(std::string_view)> handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}
}  // namespace detail

/// Routes non-fatal diagnostics (truncation, unknown elements, undefined R²).
/// Returns the previous handler so callers can restore it.
inline std::function<void(std::string_view)> set_warning_handler(
    std::function<void(std::string_view)> handler) {
  auto previous = std::move(detail::warning_handler());
  detail::warning_handler() = std::move(handler);
  return previous;
}

inline void warn(std::string_view message) {
  if (detail::warning_handler()) detail::warning_handler()(message);
}

}  // namespace bindfuse

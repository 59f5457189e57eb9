// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bindfuse/error.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment estimates for one parameter list. Bound to the list on the first
/// step; later steps must pass parameters with the same sizes in the same order.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// One bias-corrected Adam update, then zeroes every gradient.
///
/// The whole step is refused (no parameter or moment changes) if any
/// gradient holds NaN or Inf.
inline void adam_step(std::span<Tensor> params, AdamState& state) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (double g : params[p].grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("adam_step: non-finite gradient in parameter #" + std::to_string(p) +
                             " of shape " + shape_str(params[p].shape()) + "; step refused");
      }
    }
  }
  if (state.first_moment.empty()) {
    for (const Tensor& t : params) {
      state.first_moment.emplace_back(t.size(), 0.0);
      state.second_moment.emplace_back(t.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (state.first_moment[p].size() != params[p].size()) {
      throw ShapeError("adam_step: moment size mismatch for parameter #" + std::to_string(p));
    }
  }

  ++state.step_count;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p].mutable_values();
    auto g = params[p].mutable_grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
      g[i] = 0.0;
    }
  }
}

}  // namespace bindfuse

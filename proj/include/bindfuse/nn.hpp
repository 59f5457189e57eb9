// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bindfuse/rng.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

inline std::vector<Tensor> tensors_of(const ParamList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

inline void zero_grads(const ParamList& params) {
  for (auto p : params) p.tensor.zero_grad();
}

namespace init {

/// Glorot/Xavier uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(-a, a);
  return Tensor::from(std::move(shape), std::move(v), true);
}

inline Tensor normal(Shape shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(v), true);
}

inline Tensor constant(Shape shape, double value) { return Tensor::filled(std::move(shape), value, true); }

}  // namespace init

/// y = x W + b with W [in x out].
struct Affine {
  Tensor weight;
  Tensor bias;

  Affine() = default;
  Affine(std::size_t in, std::size_t out, Rng& rng)
      : weight(init::glorot({in, out}, in, out, rng)), bias(init::constant({out}, 0.0)) {}

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }

  /// Rows of x [m x in] mapped to [m x out].
  Tensor operator()(const Tensor& x) const { return add_row(matmul(x, weight), bias); }

  /// Vector x [in] mapped to [out].
  Tensor apply_vec(const Tensor& x) const {
    return reshape((*this)(reshape(x, {1, x.size()})), {out_features()});
  }

  void collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
  }
};

}  // namespace bindfuse

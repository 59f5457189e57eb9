// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bindfuse/nn.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::fusion {

struct FusionConfig {
  std::size_t complex_dim = 64;
  std::size_t sequence_dim = 64;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
};

/// [h_complex || h_seq] -> hidden1 -> hidden2 -> 1, ReLU between layers.
struct FusionMlp {
  Affine first, second, head;

  FusionMlp() = default;
  FusionMlp(const FusionConfig& c, Rng& rng)
      : first(c.complex_dim + c.sequence_dim, c.hidden1, rng), second(c.hidden1, c.hidden2, rng), head(c.hidden2, 1, rng) {}

  std::size_t input_width() const { return first.in_features(); }

  void collect(ParamList& params, const std::string& prefix) const {
    first.collect(params, prefix + ".first");
    second.collect(params, prefix + ".second");
    head.collect(params, prefix + ".head");
  }
};

/// Scalar prediction (shape {}).
inline Tensor fuse_predict(const FusionMlp& mlp, const Tensor& h_complex, const Tensor& h_seq_final) {
  if (h_complex.rank() != 1 || h_seq_final.rank() != 1 ||
      h_complex.size() + h_seq_final.size() != mlp.input_width()) {
    throw ShapeError("fuse_predict: inputs " + shape_str(h_complex.shape()) + " + " + shape_str(h_seq_final.shape()) +
                     " do not match fusion input width " + std::to_string(mlp.input_width()));
  }
  auto x = concat_vec(h_complex, h_seq_final);
  auto h = relu(mlp.second.apply_vec(relu(mlp.first.apply_vec(x))));
  return reshape(mlp.head.apply_vec(h), {});
}

struct LossBreakdown {
  double mse = 0.0;
  double geo_reg = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

struct TrainingLoss {
  Tensor total;  // differentiable scalar
  LossBreakdown parts;
};

/// Stacks scalar tensors into a vector.
inline Tensor stack_scalars(std::span<const Tensor> xs) {
  if (xs.empty()) return Tensor::zeros({0});
  Tensor out = reshape(xs[0], {1});
  for (std::size_t i = 1; i < xs.size(); ++i) out = concat_vec(out, reshape(xs[i], {1}));
  return out;
}

/// mse(preds, targets) + lambda * mean(geo_terms). With lambda == 0 the
/// regularizer is left out of the graph entirely.
inline TrainingLoss training_loss(const Tensor& preds, const Tensor& targets, std::span<const Tensor> geo_terms,
                                  double lambda) {
  if (preds.size() == 0) throw ValidationError("training_loss: empty batch");
  if (lambda < 0.0 || !std::isfinite(lambda)) throw ValidationError("training_loss: lambda must be finite and >= 0");
  TrainingLoss out;
  auto data_term = mse(preds, targets);
  out.parts.mse = data_term.item();
  out.parts.lambda = lambda;
  out.total = data_term;
  if (!geo_terms.empty()) {
    auto geo = scale(sum_all(stack_scalars(geo_terms)), 1.0 / static_cast<double>(geo_terms.size()));
    out.parts.geo_reg = geo.item();
    if (lambda != 0.0) out.total = add(data_term, scale(geo, lambda));
  }
  out.parts.total = out.total.item();
  return out;
}

}  // namespace bindfuse::fusion

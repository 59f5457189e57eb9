// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <string>
#include <string_view>

#include "bindfuse/nn.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::seq {

enum class PoolMode { mean, attention };

inline PoolMode parse_pool_mode(std::string_view s) {
  if (s == "mean") return PoolMode::mean;
  if (s == "attention") return PoolMode::attention;
  throw ValidationError("unknown pool_mode '" + std::string(s) + "' (expected mean|attention)");
}

constexpr std::string_view to_string(PoolMode m) { return m == PoolMode::mean ? "mean" : "attention"; }

/// One score per residue, score_i = H_i . w, normalised by softmax over residues.
struct AttentionPooler {
  Tensor score_vector;  // [d]

  AttentionPooler() = default;
  AttentionPooler(std::size_t d, Rng& rng) : score_vector(init::normal({d}, 0.1, rng)) {}

  Tensor weights(const Tensor& h) const {
    auto scores = matmul(h, reshape(score_vector, {score_vector.size(), 1}));
    return softmax_rows(reshape(scores, {1, h.rows()}));
  }

  void collect(ParamList& params, const std::string& prefix) const {
    params.push_back({prefix + ".score_vector", score_vector});
  }
};

/// h_seq from H [n x d]: column means, or the attention-weighted row mix.
inline Tensor pool(const Tensor& h, PoolMode mode, const AttentionPooler* pooler = nullptr) {
  if (h.rank() != 2 || h.rows() == 0) throw ShapeError("pool: expected non-empty [n x d], got " + shape_str(h.shape()));
  if (mode == PoolMode::mean) return reduce(h, 0, Reduce::mean);
  if (!pooler) throw ValidationError("pool: attention mode needs an AttentionPooler");
  return reshape(matmul(pooler->weights(h), h), {h.cols()});
}

}  // namespace bindfuse::seq

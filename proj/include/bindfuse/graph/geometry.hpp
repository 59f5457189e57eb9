// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cmath>
#include <cstddef>
#include <concepts>
#include <cstdint>
#include <utility>
#include <vector>

#include "bindfuse/graph/gin.hpp"
#include "bindfuse/rng.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::graph {

/// d_ij = ||r_i - r_j||_2 for coords [V x 3]; exact zeros on the diagonal and
/// d_ji copied from d_ij.
inline Tensor pairwise_distance(const Tensor& coords) {
  if (coords.rank() != 2 || coords.cols() != 3)
    throw ShapeError("pairwise_distance: expected [V x 3], got " + shape_str(coords.shape()));
  const std::size_t V = coords.rows();
  std::vector<double> d(V * V, 0.0);
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t j = i + 1; j < V; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double diff = coords.at(i, k) - coords.at(j, k);
        s += diff * diff;
      }
      d[i * V + j] = d[j * V + i] = std::sqrt(s);
    }
  return Tensor::from({V, V}, std::move(d));
}

/// Pairs (i < j) used by the regularizer: all of them when there are at most
/// `max_pairs`, otherwise `max_pairs` drawn without replacement from Rng(seed).
inline std::vector<std::pair<std::size_t, std::size_t>> regularizer_pairs(std::size_t V, std::size_t max_pairs,
                                                                          std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t j = i + 1; j < V; ++j) pairs.emplace_back(i, j);
  if (pairs.size() > max_pairs) {
    Rng rng(seed);
    for (std::size_t k = 0; k < max_pairs; ++k) {
      const std::size_t pick = k + rng.uniform_index(pairs.size() - k);
      std::swap(pairs[k], pairs[pick]);
    }
    pairs.resize(max_pairs);
  }
  return pairs;
}

/// Mean over sampled pairs of (head([h_i || h_j]) - d_ij)^2. `head` maps
/// [P x 2H] -> [P x 1]. Graphs with fewer than two nodes give an exact zero.
template <class Head>
  requires std::invocable<Head&, const Tensor&>
Tensor geometry_regularizer(Head&& head, const Tensor& node_embeddings, const Tensor& coords,
                            std::size_t sample_pairs, std::uint64_t seed) {
  if (sample_pairs < 1) throw ValidationError("geometry_regularizer: sample_pairs must be >= 1");
  const std::size_t V = node_embeddings.rows();
  if (V < 2) return Tensor::scalar(0.0);
  const auto pairs = regularizer_pairs(V, sample_pairs, seed);
  const auto dist = pairwise_distance(coords);
  std::vector<std::size_t> left, right;
  std::vector<double> target;
  for (auto [i, j] : pairs) {
    left.push_back(i);
    right.push_back(j);
    target.push_back(dist.at(i, j));
  }
  const std::size_t P = pairs.size();
  auto both = concat_cols({gather_rows(node_embeddings, left), gather_rows(node_embeddings, right)});
  auto predicted = reshape(head(both), {P});
  return mse(predicted, Tensor::vector(std::move(target)));
}

inline Tensor geometry_regularizer(const GinEncoder& enc, const Tensor& node_embeddings, const Tensor& coords,
                                   std::size_t sample_pairs, std::uint64_t seed) {
  return geometry_regularizer([&](const Tensor& x) { return enc.distance_head(x); }, node_embeddings, coords,
                              sample_pairs, seed);
}

}  // namespace bindfuse::graph

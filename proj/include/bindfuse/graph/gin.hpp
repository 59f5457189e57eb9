// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Graph isomorphism network encoder.
//
// Layer update for every node v:
//   h_v' = MLP((1 + eps) * h_v + sum_{u in N(v)} h_u)
// with a learnable scalar eps per layer (initialised to 0) and a two-layer
// ReLU MLP. The graph vector is a sum (default) or mean over final node rows.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bindfuse/graph/molecular_graph.hpp"
#include "bindfuse/nn.hpp"
#include "bindfuse/rng.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::graph {

enum class Readout { sum, mean };

/// (1 + eps) * H + A H followed by `mlp`. `mlp` maps [V x F] -> [V x H].
template <class Mlp>
Tensor gin_update(const Tensor& epsilon, Mlp&& mlp, const Tensor& h_prev, const Adjacency& adjacency) {
  if (h_prev.rank() != 2 || h_prev.rows() != adjacency.size()) {
    throw ShapeError("gin layer: node matrix " + shape_str(h_prev.shape()) + " vs adjacency of " +
                     std::to_string(adjacency.size()) + " nodes");
  }
  auto self_term = scale_by(add_scalar(epsilon, 1.0), h_prev);
  return mlp(add(self_term, neighbor_sum(h_prev, adjacency)));
}

struct GinLayer {
  Tensor epsilon;
  Affine hidden;
  Affine output;

  GinLayer() = default;
  GinLayer(std::size_t in, std::size_t width, Rng& rng)
      : epsilon(init::constant({}, 0.0)), hidden(in, width, rng), output(width, width, rng) {}

  std::size_t in_features() const { return hidden.in_features(); }
  std::size_t out_features() const { return output.out_features(); }

  Tensor mlp(const Tensor& x) const { return output(relu(hidden(x))); }

  void collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".epsilon", epsilon});
    hidden.collect(out, prefix + ".mlp0");
    output.collect(out, prefix + ".mlp1");
  }
};

inline Tensor gin_layer_forward(const GinLayer& layer, const Tensor& h_prev, const Adjacency& adjacency) {
  if (h_prev.rank() == 2 && h_prev.cols() != layer.in_features()) {
    throw ShapeError("gin layer expects width " + std::to_string(layer.in_features()) + ", got " +
                     shape_str(h_prev.shape()));
  }
  return gin_update(layer.epsilon, [&](const Tensor& x) { return layer.mlp(x); }, h_prev, adjacency);
}

struct GraphEncoding {
  Tensor nodes;   // [V x H]
  Tensor pooled;  // [H]
};

struct GinEncoder {
  std::vector<GinLayer> layers;
  Readout readout = Readout::sum;
  Affine distance_head;  // [h_i || h_j] -> predicted distance

  GinEncoder() = default;
  GinEncoder(std::size_t in, std::size_t width, std::size_t depth, Readout mode, Rng& rng)
      : readout(mode) {
    for (std::size_t k = 0; k < depth; ++k) layers.emplace_back(k == 0 ? in : width, width, rng);
    distance_head = Affine(2 * width, 1, rng);
  }

  std::size_t width() const { return layers.back().out_features(); }

  GraphEncoding encode(const MolecularGraph& g) const {
    if (g.num_nodes() == 0) throw ValidationError("encode_graph: empty graph");
    Tensor h = g.node_features;
    for (const auto& layer : layers) h = gin_layer_forward(layer, h, g.adjacency);
    auto pooled = reduce(h, 0, readout == Readout::sum ? Reduce::sum : Reduce::mean);
    return {h, pooled};
  }

  void collect(ParamList& out, const std::string& prefix) const {
    for (std::size_t k = 0; k < layers.size(); ++k) layers[k].collect(out, prefix + ".gin" + std::to_string(k));
    distance_head.collect(out, prefix + ".distance_head");
  }
};

/// h_complex for a graph.
inline Tensor encode_graph(const GinEncoder& enc, const MolecularGraph& g) { return enc.encode(g).pooled; }

}  // namespace bindfuse::graph

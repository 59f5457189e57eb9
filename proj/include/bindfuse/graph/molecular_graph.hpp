// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bindfuse/data/records.hpp"
#include "bindfuse/error.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::graph {

/// One-hot element vocabulary; the last slot collects everything else.
inline constexpr std::array<std::string_view, 11> kElements{
    "C", "N", "O", "S", "P", "H", "F", "Cl", "Br", "I", "other"};

inline std::size_t element_index(std::string_view symbol, bool warn_unknown = true) {
  for (std::size_t i = 0; i + 1 < kElements.size(); ++i)
    if (kElements[i] == symbol) return i;
  if (warn_unknown) warn("unknown element '" + std::string(symbol) + "' mapped to 'other'");
  return kElements.size() - 1;
}

using Adjacency = std::vector<std::vector<std::size_t>>;

struct MolecularGraph {
  Tensor node_features;  // [V x (11 + extra)]
  Adjacency adjacency;
  Tensor coords;  // [V x 3]
  std::vector<data::BondType> bond_types;  // parallel to the record's bond list

  std::size_t num_nodes() const { return adjacency.size(); }
};

inline std::size_t node_feature_width(std::size_t extra_features) {
  return kElements.size() + extra_features;
}

/// Node features are element one-hot || the record's extra features.
inline MolecularGraph featurize(const data::ComplexRecord& rec, std::size_t extra_features) {
  if (auto v = data::complex_violation(rec); !v.empty())
    throw ValidationError("record '" + rec.id + "': " + v);
  const std::size_t V = rec.atoms.size();
  const std::size_t F = node_feature_width(extra_features);
  std::vector<double> feats(V * F, 0.0), xyz(V * 3);
  for (std::size_t v = 0; v < V; ++v) {
    const auto& atom = rec.atoms[v];
    if (atom.features.size() != extra_features) {
      throw ValidationError("record '" + rec.id + "': atom " + std::to_string(v) + " has " +
                            std::to_string(atom.features.size()) + " features, expected " +
                            std::to_string(extra_features));
    }
    feats[v * F + element_index(atom.element)] = 1.0;
    for (std::size_t f = 0; f < extra_features; ++f) feats[v * F + kElements.size() + f] = atom.features[f];
    for (std::size_t k = 0; k < 3; ++k) xyz[v * 3 + k] = atom.xyz[k];
  }
  MolecularGraph g;
  g.adjacency.assign(V, {});
  for (const auto& b : rec.bonds) {
    g.adjacency[b.i].push_back(b.j);
    g.adjacency[b.j].push_back(b.i);
    g.bond_types.push_back(b.type);
  }
  g.node_features = Tensor::from({V, F}, std::move(feats));
  g.coords = Tensor::from({V, 3}, std::move(xyz));
  return g;
}

/// Relabels nodes: node v of the input becomes node perm[v] of the output.
inline MolecularGraph permute_nodes(const MolecularGraph& g, const std::vector<std::size_t>& perm) {
  const std::size_t V = g.num_nodes();
  const std::size_t F = g.node_features.cols();
  std::vector<double> feats(V * F), xyz(V * 3);
  Adjacency adj(V);
  for (std::size_t v = 0; v < V; ++v) {
    const std::size_t p = perm.at(v);
    for (std::size_t f = 0; f < F; ++f) feats[p * F + f] = g.node_features.at(v, f);
    for (std::size_t k = 0; k < 3; ++k) xyz[p * 3 + k] = g.coords.at(v, k);
    for (std::size_t u : g.adjacency[v]) adj[p].push_back(perm.at(u));
  }
  MolecularGraph out;
  out.node_features = Tensor::from({V, F}, std::move(feats));
  out.coords = Tensor::from({V, 3}, std::move(xyz));
  out.adjacency = std::move(adj);
  out.bond_types = g.bond_types;
  return out;
}

}  // namespace bindfuse::graph

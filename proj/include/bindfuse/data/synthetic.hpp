// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Seeded synthetic paired dataset with a known ground truth.
//
// Sample i draws from Rng(mix_seed(seed, i)), so any index range can be
// generated independently. Per sample:
//   graph     V ~ U{min_atoms..max_atoms}; random recursive tree (node v picks
//             a parent in [0, v)); then U{0..V} attempts at an extra bond
//             between a random non-adjacent pair. Coordinates: atom 0 at the
//             origin, each other atom 1.5 A from its tree parent along a
//             random direction.
//   sequence  length n ~ U{min_length..max_length}; centre t ~ U{k..n-1-k};
//             background residues never form the bigram "KR"; m ~ U{0..max_motifs}
//             copies of "KR" are planted in distinct aligned slots of the
//             window [t-k, t+k], so the sequence contains exactly m copies.
//   label     y = alpha*deg + beta*m + gamma*(deg*m) + sigma*N(0,1),
//             deg = 2|E|/|V|, evaluated left to right in that order.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bindfuse/data/alphabet.hpp"
#include "bindfuse/data/records.hpp"
#include "bindfuse/error.hpp"
#include "bindfuse/rng.hpp"

namespace bindfuse::data {

struct GeneratorParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.5;
  double sigma = 0.1;
  int min_atoms = 4;
  int max_atoms = 16;
  int min_length = 24;
  int max_length = 64;
  int max_motifs = 3;
  int window_half_width = 8;
  int extra_features = 2;
};

/// Closed-form label without noise.
inline double synthetic_label(const GeneratorParams& p, double mean_deg, double motifs) {
  return p.alpha * mean_deg + p.beta * motifs + p.gamma * (mean_deg * motifs);
}

namespace detail {

struct WeightedSymbol {
  const char* symbol;
  double weight;
};

inline constexpr std::array<WeightedSymbol, 10> kElementMix{{
    {"C", 0.50}, {"N", 0.15}, {"O", 0.15}, {"S", 0.05}, {"H", 0.05},
    {"P", 0.03}, {"F", 0.03}, {"Cl", 0.02}, {"Br", 0.01}, {"I", 0.01},
}};

inline const char* pick_element(Rng& rng) {
  double u = rng.uniform();
  for (const auto& e : kElementMix) {
    if (u < e.weight) return e.symbol;
    u -= e.weight;
  }
  return "C";
}

inline BondType pick_bond(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.70) return BondType::single;
  if (u < 0.85) return BondType::double_;
  if (u < 0.95) return BondType::aromatic;
  return BondType::triple;
}

inline ComplexRecord random_complex(Rng& rng, const GeneratorParams& p, const std::string& id) {
  ComplexRecord r;
  r.id = id;
  const int v_count = rng.uniform_int(p.min_atoms, p.max_atoms);
  const auto V = static_cast<std::size_t>(v_count);
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> parent(V, 0);
  for (std::size_t v = 1; v < V; ++v) {
    parent[v] = rng.uniform_index(v);
    edges.emplace(parent[v], v);
    r.bonds.push_back({parent[v], v, pick_bond(rng)});
  }
  const int extra_attempts = rng.uniform_int(0, v_count);
  for (int a = 0; a < extra_attempts; ++a) {
    std::size_t i = rng.uniform_index(V), j = rng.uniform_index(V);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!edges.emplace(i, j).second) continue;
    r.bonds.push_back({i, j, pick_bond(rng)});
  }
  r.atoms.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    Atom& atom = r.atoms[v];
    atom.element = pick_element(rng);
    for (int f = 0; f < p.extra_features; ++f) atom.features.push_back(rng.uniform(-1.0, 1.0));
    if (v == 0) continue;
    std::array<double, 3> dir{rng.normal(), rng.normal(), rng.normal()};
    double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    if (norm < 1e-12) {
      dir = {1.0, 0.0, 0.0};
      norm = 1.0;
    }
    for (int k = 0; k < 3; ++k) atom.xyz[k] = r.atoms[parent[v]].xyz[k] + 1.5 * dir[k] / norm;
  }
  return r;
}

inline SequenceRecord random_sequence(Rng& rng, const GeneratorParams& p, const std::string& id,
                                      std::size_t& motifs) {
  const auto symbols = alphabet_symbols(Alphabet::amino);
  const int k = p.window_half_width;
  const int n = rng.uniform_int(std::max(p.min_length, 2 * k + 1), p.max_length);
  const int t = rng.uniform_int(k, n - 1 - k);
  SequenceRecord s;
  s.id = id;
  s.residues.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    char c = 0;
    do {
      c = symbols[rng.uniform_index(symbols.size())];
    } while (i > 0 && c == 'R' && s.residues[static_cast<std::size_t>(i - 1)] == 'K');
    s.residues[static_cast<std::size_t>(i)] = c;
  }
  // Aligned two-residue slots inside [t-k, t+k].
  std::vector<int> slots;
  for (int start = t - k; start + 1 <= t + k; start += 2) slots.push_back(start);
  const int m = rng.uniform_int(0, std::min<int>(p.max_motifs, static_cast<int>(slots.size())));
  rng.shuffle(slots);
  for (int i = 0; i < m; ++i) {
    s.residues[static_cast<std::size_t>(slots[static_cast<std::size_t>(i)])] = 'K';
    s.residues[static_cast<std::size_t>(slots[static_cast<std::size_t>(i)] + 1)] = 'R';
  }
  s.mutation_pos = static_cast<std::size_t>(t);
  motifs = static_cast<std::size_t>(m);
  return s;
}

}  // namespace detail

/// `n` samples with ids "syn<index>". Deterministic in (n, seed, params).
inline std::vector<PairedSample> generate_synthetic(std::size_t n, std::uint64_t seed,
                                                    const GeneratorParams& params = {}) {
  if (n < 1) throw ValidationError("generate_synthetic: n must be >= 1");
  if (params.min_atoms < 1 || params.max_atoms < params.min_atoms)
    throw ValidationError("generate_synthetic: bad atom range");
  if (params.max_length < 2 * params.window_half_width + 1)
    throw ValidationError("generate_synthetic: max_length too short for the motif window");
  std::vector<PairedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    const std::string id = "syn" + std::to_string(i);
    PairedSample sample;
    sample.complex = detail::random_complex(rng, params, id);
    std::size_t motifs = 0;
    sample.sequence = detail::random_sequence(rng, params, id, motifs);
    const double clean =
        synthetic_label(params, mean_degree(sample.complex), static_cast<double>(motifs));
    sample.label = params.sigma == 0.0 ? clean : clean + params.sigma * rng.normal();
    sample.complex.affinity = sample.label;
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace bindfuse::data

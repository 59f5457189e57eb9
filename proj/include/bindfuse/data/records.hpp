// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bindfuse/data/alphabet.hpp"
#include "bindfuse/error.hpp"

namespace bindfuse::data {

enum class BondType { single, double_, triple, aromatic };

constexpr std::string_view to_string(BondType b) {
  switch (b) {
    case BondType::single: return "single";
    case BondType::double_: return "double";
    case BondType::triple: return "triple";
    case BondType::aromatic: return "aromatic";
  }
  return "single";
}

inline std::optional<BondType> parse_bond_type(std::string_view s) {
  if (s == "single") return BondType::single;
  if (s == "double") return BondType::double_;
  if (s == "triple") return BondType::triple;
  if (s == "aromatic") return BondType::aromatic;
  return std::nullopt;
}

struct Atom {
  std::string element;
  std::vector<double> features;
  std::array<double, 3> xyz{};  // Angstrom
};

struct Bond {
  std::size_t i = 0;
  std::size_t j = 0;
  BondType type = BondType::single;
};

/// One protein-ligand complex: atoms, typed undirected bonds, affinity label.
struct ComplexRecord {
  std::string id;
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  double affinity = 0.0;
};

struct SequenceRecord {
  std::string id;
  std::string residues;
  std::optional<std::size_t> mutation_pos;
};

struct PairedSample {
  ComplexRecord complex;
  SequenceRecord sequence;
  double label = 0.0;
};

/// Returns an empty string when valid, otherwise the first violated rule.
inline std::string complex_violation(const ComplexRecord& r) {
  if (r.atoms.empty()) return "atom count must be >= 1";
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Bond& b : r.bonds) {
    if (b.i >= r.atoms.size() || b.j >= r.atoms.size()) return "bond index out of range";
    if (b.i == b.j) return "self bond";
    if (!seen.emplace(std::min(b.i, b.j), std::max(b.i, b.j)).second) return "duplicate bond";
  }
  for (const Atom& a : r.atoms)
    for (double c : a.xyz)
      if (!std::isfinite(c)) return "non-finite coordinate";
  return {};
}

inline std::string sequence_violation(const SequenceRecord& s, Alphabet alphabet) {
  if (s.residues.empty()) return "empty sequence";
  for (char c : s.residues)
    if (!in_alphabet(alphabet, c)) return std::string("illegal residue '") + c + "'";
  if (s.mutation_pos && *s.mutation_pos >= s.residues.size()) return "mutation_pos out of range";
  return {};
}

/// 2|E| / |V|.
inline double mean_degree(const ComplexRecord& r) {
  return 2.0 * static_cast<double>(r.bonds.size()) / static_cast<double>(r.atoms.size());
}

/// Non-overlapping left-to-right occurrences of `motif`.
inline std::size_t count_motif(std::string_view residues, std::string_view motif) {
  std::size_t count = 0;
  for (std::size_t pos = residues.find(motif); pos != std::string_view::npos;
       pos = residues.find(motif, pos + motif.size()))
    ++count;
  return count;
}

}  // namespace bindfuse::data

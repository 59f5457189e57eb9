// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <string>
#include <string_view>

#include "bindfuse/error.hpp"

namespace bindfuse::data {

enum class Alphabet { amino, nucleotide };

/// Residue symbols in vocabulary order.
constexpr std::string_view alphabet_symbols(Alphabet a) {
  return a == Alphabet::amino ? std::string_view("ACDEFGHIKLMNPQRSTVWY")
                              : std::string_view("ACGTN");
}

constexpr std::string_view to_string(Alphabet a) {
  return a == Alphabet::amino ? "amino" : "nucleotide";
}

inline Alphabet parse_alphabet(std::string_view s) {
  if (s == "amino") return Alphabet::amino;
  if (s == "nucleotide") return Alphabet::nucleotide;
  throw ValidationError("unknown alphabet '" + std::string(s) + "' (expected amino|nucleotide)");
}

constexpr bool in_alphabet(Alphabet a, char c) {
  return alphabet_symbols(a).find(c) != std::string_view::npos;
}

}  // namespace bindfuse::data

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bindfuse/error.hpp"
#include "bindfuse/seq/vocabulary.hpp"

namespace bindfuse::mutwin {

struct MutationWindow {
  std::size_t center = 0;
  std::size_t half_width = 8;
  std::vector<std::size_t> token_ids;  // length 2k+1
  std::vector<bool> padded;
};

/// Tokens t-k..t+k; positions outside the sequence become `pad_id`.
inline MutationWindow extract_window(const std::vector<std::size_t>& tokens, std::size_t t, std::size_t k,
                                     std::size_t pad_id) {
  if (k < 1) throw ValidationError("extract_window: half width must be >= 1");
  if (t >= tokens.size()) {
    throw ValidationError("extract_window: center " + std::to_string(t) + " outside sequence of length " +
                          std::to_string(tokens.size()));
  }
  MutationWindow w{t, k, {}, {}};
  w.token_ids.reserve(2 * k + 1);
  w.padded.reserve(2 * k + 1);
  for (std::size_t i = 0; i < 2 * k + 1; ++i) {
    // position t - k + i, kept unsigned by testing before subtracting
    const bool inside = t + i >= k && t + i - k < tokens.size();
    w.token_ids.push_back(inside ? tokens[t + i - k] : pad_id);
    w.padded.push_back(!inside);
  }
  return w;
}

/// Mutation position, else the midpoint n/2 when `midpoint_fallback` is on.
inline std::optional<std::size_t> window_center(const seq::TokenizedSequence& s, bool midpoint_fallback) {
  if (s.mutation_pos) return s.mutation_pos;
  if (midpoint_fallback && !s.ids.empty()) return s.ids.size() / 2;
  return std::nullopt;
}

}  // namespace bindfuse::mutwin

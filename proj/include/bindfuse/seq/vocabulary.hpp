// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bindfuse/data/alphabet.hpp"
#include "bindfuse/data/records.hpp"
#include "bindfuse/error.hpp"

namespace bindfuse::seq {

/// Alphabet symbols take ids 0..A-1 in alphabet order, then PAD = A,
/// MASK = A + 1, UNK = A + 2.
class Vocabulary {
 public:
  explicit Vocabulary(data::Alphabet alphabet = data::Alphabet::amino)
      : alphabet_(alphabet), symbols_(data::alphabet_symbols(alphabet)) {}

  data::Alphabet alphabet() const { return alphabet_; }
  std::size_t alphabet_size() const { return symbols_.size(); }
  std::size_t size() const { return symbols_.size() + 3; }
  std::size_t pad_id() const { return symbols_.size(); }
  std::size_t mask_id() const { return symbols_.size() + 1; }
  std::size_t unk_id() const { return symbols_.size() + 2; }

  std::size_t id_of(char c) const {
    const auto pos = symbols_.find(c);
    return pos == std::string_view::npos ? unk_id() : pos;
  }

  char symbol_of(std::size_t id) const {
    if (id < symbols_.size()) return symbols_[id];
    if (id == pad_id()) return '_';
    if (id == mask_id()) return '#';
    return '?';
  }

 private:
  data::Alphabet alphabet_;
  std::string_view symbols_;
};

struct TokenizedSequence {
  std::vector<std::size_t> ids;
  std::optional<std::size_t> mutation_pos;
  bool truncated = false;
};

/// Maps residues to ids, keeping at most `max_len` tokens (with a warning).
/// A mutation position past the cut is clamped to the last kept token.
inline TokenizedSequence tokenize(const data::SequenceRecord& s, const Vocabulary& vocab, std::size_t max_len) {
  TokenizedSequence out;
  const std::size_t n = std::min(s.residues.size(), max_len);
  out.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.ids.push_back(vocab.id_of(s.residues[i]));
  if (s.residues.size() > max_len) {
    out.truncated = true;
    warn("sequence '" + s.id + "' truncated from " + std::to_string(s.residues.size()) + " to " +
         std::to_string(max_len) + " tokens");
  }
  out.mutation_pos = s.mutation_pos;
  if (out.mutation_pos && n > 0 && *out.mutation_pos >= n) out.mutation_pos = n - 1;
  return out;
}

inline std::string detokenize(const std::vector<std::size_t>& ids, const Vocabulary& vocab) {
  std::string s;
  s.reserve(ids.size());
  for (auto id : ids) s.push_back(vocab.symbol_of(id));
  return s;
}

}  // namespace bindfuse::seq

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// FASTA reader/writer.
//
//   >id [description...]
//   RESIDUES
//   MORE RESIDUES
//
// The id is the header text up to the first whitespace. A `mut=<t>` token in
// the description sets the zero-based mutation position. Body lines are
// concatenated; blank lines are ignored.

#pragma once

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bindfuse/data/alphabet.hpp"
#include "bindfuse/data/records.hpp"
#include "bindfuse/error.hpp"

namespace bindfuse::data {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

inline std::vector<SequenceRecord> parse_fasta(std::string_view text, Alphabet alphabet) {
  std::vector<SequenceRecord> records;
  std::size_t header_line = 0;
  auto finish = [&] {
    if (records.empty()) return;
    const auto& r = records.back();
    if (r.residues.empty()) {
      throw ValidationError("FASTA record '" + r.id + "' (line " + std::to_string(header_line) +
                            "): empty sequence");
    }
    if (r.mutation_pos && *r.mutation_pos >= r.residues.size()) {
      throw ValidationError("FASTA record '" + r.id + "': mut=" + std::to_string(*r.mutation_pos) +
                            " out of range for length " + std::to_string(r.residues.size()));
    }
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (line.front() == '>') {
      finish();
      auto tokens = detail::split_ws(line.substr(1));
      if (tokens.empty()) {
        throw ValidationError("FASTA line " + std::to_string(line_no) + ": header without id");
      }
      SequenceRecord rec;
      rec.id = std::string(tokens.front());
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].substr(0, 4) != "mut=") continue;
        auto digits = tokens[i].substr(4);
        std::size_t pos = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), pos);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
          throw ValidationError("FASTA record '" + rec.id + "' (line " + std::to_string(line_no) +
                                "): malformed " + std::string(tokens[i]));
        }
        rec.mutation_pos = pos;
      }
      records.push_back(std::move(rec));
      header_line = line_no;
    } else {
      if (records.empty()) {
        throw ValidationError("FASTA line " + std::to_string(line_no) +
                              ": sequence data before any '>' header");
      }
      auto& rec = records.back();
      for (std::size_t col = 0; col < line.size(); ++col) {
        const char c = line[col];
        if (c == ' ' || c == '\t') continue;
        if (!in_alphabet(alphabet, c)) {
          throw ValidationError("FASTA record '" + rec.id + "', line " + std::to_string(line_no) +
                                ", column " + std::to_string(col + 1) + ": illegal character '" +
                                std::string(1, c) + "' for " + std::string(to_string(alphabet)) +
                                " alphabet");
        }
        rec.residues.push_back(c);
      }
    }
    if (end == text.size()) break;
  }
  finish();
  return records;
}

/// One header and one unwrapped body line per record.
inline std::string serialize_fasta(const std::vector<SequenceRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) {
    os << '>' << r.id;
    if (r.mutation_pos) os << " mut=" << *r.mutation_pos;
    os << '\n' << r.residues << '\n';
  }
  return os.str();
}

}  // namespace bindfuse::data

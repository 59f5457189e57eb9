// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// On-disk dataset directory:
//   complexes.jsonl   complex records; "affinity" is the label
//   sequences.fasta   one record per complex, same id
//   dataset.json      {"alphabet": "amino"|"nucleotide", "extra_features": int}
//   split.json        optional split manifest

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bindfuse/data/complex_jsonl.hpp"
#include "bindfuse/data/fasta.hpp"
#include "bindfuse/data/records.hpp"
#include "bindfuse/data/split.hpp"
#include "bindfuse/error.hpp"

namespace bindfuse::data {

struct DatasetMeta {
  Alphabet alphabet = Alphabet::amino;
  std::size_t extra_features = 0;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<PairedSample> samples;
  std::optional<DatasetSplit> split;
};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

/// Joins complexes and sequences on id, in complex order. Ids present in only
/// one input are returned in `unpaired`.
inline std::vector<PairedSample> pair_by_id(const std::vector<ComplexRecord>& complexes,
                                            const std::vector<SequenceRecord>& sequences,
                                            std::vector<std::string>* unpaired = nullptr) {
  std::map<std::string, const SequenceRecord*> by_id;
  for (const auto& s : sequences) {
    if (!by_id.emplace(s.id, &s).second)
      throw ValidationError("duplicate sequence id '" + s.id + "'");
  }
  std::vector<PairedSample> out;
  std::map<std::string, bool> used;
  for (const auto& c : complexes) {
    auto it = by_id.find(c.id);
    if (it == by_id.end()) {
      if (!unpaired) throw ValidationError("complex '" + c.id + "' has no matching sequence");
      unpaired->push_back(c.id);
      continue;
    }
    used[c.id] = true;
    out.push_back({c, *it->second, c.affinity});
  }
  for (const auto& s : sequences) {
    if (used.count(s.id)) continue;
    if (!unpaired) throw ValidationError("sequence '" + s.id + "' has no matching complex");
    unpaired->push_back(s.id);
  }
  return out;
}

inline void write_dataset(const std::filesystem::path& dir, const std::vector<PairedSample>& samples,
                          const DatasetMeta& meta) {
  std::filesystem::create_directories(dir);
  std::vector<ComplexRecord> complexes;
  std::vector<SequenceRecord> sequences;
  for (const auto& s : samples) {
    complexes.push_back(s.complex);
    complexes.back().affinity = s.label;
    sequences.push_back(s.sequence);
  }
  write_text(dir / "complexes.jsonl", serialize_complex_jsonl(complexes));
  write_text(dir / "sequences.fasta", serialize_fasta(sequences));
  nlohmann::json m = {{"alphabet", std::string(to_string(meta.alphabet))},
                      {"extra_features", meta.extra_features}};
  write_text(dir / "dataset.json", m.dump(2) + "\n");
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  if (std::filesystem::exists(dir / "dataset.json")) {
    try {
      auto m = nlohmann::json::parse(read_text(dir / "dataset.json"));
      ds.meta.alphabet = parse_alphabet(m.at("alphabet").get<std::string>());
      ds.meta.extra_features = m.at("extra_features").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("dataset.json: " + std::string(e.what()));
    }
  }
  auto complexes = parse_complex_jsonl(read_text(dir / "complexes.jsonl"));
  auto sequences = parse_fasta(read_text(dir / "sequences.fasta"), ds.meta.alphabet);
  if (!std::filesystem::exists(dir / "dataset.json") && !complexes.empty())
    ds.meta.extra_features = complexes.front().atoms.front().features.size();
  for (const auto& c : complexes)
    for (const auto& a : c.atoms)
      if (a.features.size() != ds.meta.extra_features)
        throw ValidationError("record '" + c.id + "': expected " +
                              std::to_string(ds.meta.extra_features) + " atom features, got " +
                              std::to_string(a.features.size()));
  ds.samples = pair_by_id(complexes, sequences);
  if (std::filesystem::exists(dir / "split.json")) {
    try {
      ds.split = split_from_json(nlohmann::json::parse(read_text(dir / "split.json")),
                                 ds.samples.size());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("split.json: " + std::string(e.what()));
    }
  }
  return ds;
}

}  // namespace bindfuse::data

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Complex interchange format: one JSON object per line,
//
//   {"id": str,
//    "atoms": [{"element": str, "features": [float...], "xyz": [x, y, z]}],
//    "bonds": [[i, j, "single"|"double"|"triple"|"aromatic"]],
//    "affinity": float}
//
// Blank lines are skipped. Record order is preserved.

#pragma once

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bindfuse/data/records.hpp"
#include "bindfuse/error.hpp"

namespace bindfuse::data {

struct ComplexParseOptions {
  /// Prediction inputs may omit "affinity"; it is then NaN.
  bool require_affinity = true;
};

namespace detail {

inline double json_number(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number()) throw ValidationError(what + " must be a number");
  return j.get<double>();
}

inline ComplexRecord complex_from_json(const nlohmann::json& j, const ComplexParseOptions& opts) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  ComplexRecord r;
  if (!j.contains("id") || !j["id"].is_string()) throw ValidationError("missing string field 'id'");
  r.id = j["id"].get<std::string>();
  auto fail = [&](const std::string& rule) -> ValidationError {
    return ValidationError("record '" + r.id + "': " + rule);
  };
  try {
    if (!j.contains("atoms") || !j["atoms"].is_array()) throw fail("missing array field 'atoms'");
    for (const auto& a : j["atoms"]) {
      Atom atom;
      if (!a.is_object() || !a.contains("element") || !a["element"].is_string())
        throw fail("atom without string 'element'");
      atom.element = a["element"].get<std::string>();
      if (a.contains("features")) {
        if (!a["features"].is_array()) throw fail("atom 'features' must be an array");
        for (const auto& f : a["features"]) atom.features.push_back(json_number(f, "feature"));
      }
      if (!a.contains("xyz") || !a["xyz"].is_array() || a["xyz"].size() != 3)
        throw fail("atom 'xyz' must hold exactly 3 numbers");
      for (std::size_t k = 0; k < 3; ++k) atom.xyz[k] = json_number(a["xyz"][k], "xyz");
      r.atoms.push_back(std::move(atom));
    }
    if (j.contains("bonds")) {
      if (!j["bonds"].is_array()) throw fail("'bonds' must be an array");
      for (const auto& b : j["bonds"]) {
        if (!b.is_array() || b.size() != 3 || !b[0].is_number_integer() ||
            !b[1].is_number_integer() || !b[2].is_string())
          throw fail("bond must be [i, j, type]");
        if (b[0].get<long long>() < 0 || b[1].get<long long>() < 0)
          throw fail("bond index out of range");
        auto type = parse_bond_type(b[2].get<std::string>());
        if (!type) throw fail("unknown bond type '" + b[2].get<std::string>() + "'");
        r.bonds.push_back({b[0].get<std::size_t>(), b[1].get<std::size_t>(), *type});
      }
    }
    if (j.contains("affinity") && !j["affinity"].is_null()) {
      r.affinity = json_number(j["affinity"], "affinity");
      if (!std::isfinite(r.affinity)) throw fail("affinity must be finite");
    } else if (opts.require_affinity) {
      throw fail("missing field 'affinity'");
    } else {
      r.affinity = std::numeric_limits<double>::quiet_NaN();
    }
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind("record '", 0) == 0) throw;
    throw fail(msg);
  }
  if (auto v = complex_violation(r); !v.empty()) throw fail(v);
  return r;
}

}  // namespace detail

inline nlohmann::json complex_to_json(const ComplexRecord& r) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : r.atoms) {
    atoms.push_back({{"element", a.element},
                     {"features", a.features},
                     {"xyz", {a.xyz[0], a.xyz[1], a.xyz[2]}}});
  }
  nlohmann::json bonds = nlohmann::json::array();
  for (const auto& b : r.bonds) bonds.push_back({b.i, b.j, std::string(to_string(b.type))});
  nlohmann::json j = {{"id", r.id}, {"atoms", atoms}, {"bonds", bonds}};
  if (std::isfinite(r.affinity)) j["affinity"] = r.affinity;
  return j;
}

inline std::vector<ComplexRecord> parse_complex_jsonl(std::istream& in,
                                                      const ComplexParseOptions& opts = {}) {
  std::vector<ComplexRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("complex JSONL line " + std::to_string(line_no) +
                            ": malformed JSON (" + e.what() + ")");
    }
    try {
      out.push_back(detail::complex_from_json(j, opts));
    } catch (const ValidationError& e) {
      throw ValidationError("complex JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ComplexRecord> parse_complex_jsonl(const std::string& text,
                                                      const ComplexParseOptions& opts = {}) {
  std::istringstream in(text);
  return parse_complex_jsonl(in, opts);
}

inline void write_complex_jsonl(std::ostream& out, const std::vector<ComplexRecord>& records) {
  for (const auto& r : records) out << complex_to_json(r).dump() << '\n';
}

inline std::string serialize_complex_jsonl(const std::vector<ComplexRecord>& records) {
  std::ostringstream os;
  write_complex_jsonl(os, records);
  return os.str();
}

}  // namespace bindfuse::data

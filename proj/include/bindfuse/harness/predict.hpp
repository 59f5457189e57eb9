// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bindfuse/data/dataset.hpp"
#include "bindfuse/harness/model.hpp"

namespace bindfuse::harness {

struct Prediction {
  std::string id;
  double affinity_pred = 0.0;
};

struct PredictionRun {
  std::vector<Prediction> predictions;  // complex-file order
  std::vector<std::string> unpaired;
};

/// Predicts every id present in both inputs; the rest are reported, not fatal.
inline PredictionRun predict_records(const BindingModel& model, const std::vector<data::ComplexRecord>& complexes,
                                     const std::vector<data::SequenceRecord>& sequences) {
  for (const auto& c : complexes)
    for (const auto& a : c.atoms)
      if (a.features.size() != model.meta.extra_features) {
        throw ValidationError("record '" + c.id + "': expected " + std::to_string(model.meta.extra_features) +
                              " atom features (checkpoint featurization), got " + std::to_string(a.features.size()));
      }
  PredictionRun run;
  const auto paired = data::pair_by_id(complexes, sequences, &run.unpaired);
  const auto prepared = prepare_samples(paired, model.meta, model.config.max_len);
  for (const auto& s : prepared) run.predictions.push_back({s.id, model.predict(s)});
  return run;
}

inline std::string predictions_jsonl(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) out += nlohmann::json{{"id", p.id}, {"affinity_pred", p.affinity_pred}}.dump() + "\n";
  return out;
}

}  // namespace bindfuse::harness

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Versioned JSON checkpoints. Numbers are written in nlohmann's shortest
// round-trip form, so load(save(x)) reproduces every double bit for bit.

#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "bindfuse/data/dataset.hpp"
#include "bindfuse/harness/config.hpp"
#include "bindfuse/harness/model.hpp"
#include "bindfuse/seq/mlm.hpp"

namespace bindfuse::harness {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointInfo {
  std::size_t epoch = 0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
};

inline nlohmann::json params_to_json(const ParamList& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : params) {
    if (out.contains(p.name)) throw ValidationError("checkpoint: duplicate parameter name '" + p.name + "'");
    out[p.name] = {{"shape", p.tensor.shape()},
                   {"values", std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())}};
  }
  return out;
}

/// Copies stored values into `params`. With `exact`, the stored set must equal
/// the parameter set; otherwise stored names absent from `params` are ignored.
inline void params_from_json(const nlohmann::json& stored, ParamList& params, bool exact) {
  std::set<std::string> used;
  for (auto& p : params) {
    if (!stored.contains(p.name)) throw ValidationError("checkpoint: missing parameter '" + p.name + "'");
    const auto& entry = stored.at(p.name);
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != p.tensor.shape()) {
      throw ValidationError("checkpoint: parameter '" + p.name + "' has shape " + shape_str(shape) +
                            ", model expects " + shape_str(p.tensor.shape()));
    }
    const auto& values = entry.at("values");
    if (values.size() != p.tensor.size()) throw ValidationError("checkpoint: parameter '" + p.name + "' size mismatch");
    auto dst = p.tensor.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = values[i].get<double>();
    used.insert(p.name);
  }
  if (exact && used.size() != stored.size()) {
    for (const auto& [name, _] : stored.items())
      if (!used.count(name)) throw ValidationError("checkpoint: unexpected parameter '" + name + "'");
  }
}

inline nlohmann::json meta_to_json(const data::DatasetMeta& meta) {
  return {{"alphabet", data::to_string(meta.alphabet)}, {"extra_features", meta.extra_features}};
}

inline data::DatasetMeta meta_from_json(const nlohmann::json& j) {
  return {data::parse_alphabet(j.at("alphabet").get<std::string>()), j.at("extra_features").get<std::size_t>()};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  for (const auto& [k, v] : j.items()) set_config_value(c, k, v.get<std::string>());
  validate(c);
  return c;
}

inline nlohmann::json save_checkpoint(const BindingModel& model, const CheckpointInfo& info) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = "model";
  j["config"] = config_entries(model.config);
  j["config_fingerprint"] = config_fingerprint(model.config);
  j["featurization"] = meta_to_json(model.meta);
  j["featurization_fingerprint"] = featurization_fingerprint(model.meta);
  j["epoch"] = info.epoch;
  j["best_val_loss"] = std::isfinite(info.best_val_loss) ? nlohmann::json(info.best_val_loss) : nlohmann::json();
  j["target_mean"] = model.target_mean;
  j["target_scale"] = model.target_scale;
  j["parameters"] = params_to_json(model.parameters());
  return j;
}

struct LoadedModel {
  BindingModel model;
  CheckpointInfo info;
};

inline void require_version(const nlohmann::json& j, std::string_view kind) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kCheckpointVersion) {
    throw ValidationError("checkpoint: unsupported format_version");
  }
  if (j.value("kind", std::string()) != kind) {
    throw ValidationError("checkpoint: expected kind '" + std::string(kind) + "', got '" +
                          j.value("kind", std::string()) + "'");
  }
}

inline LoadedModel load_checkpoint(const nlohmann::json& j) {
  require_version(j, "model");
  const auto config = config_from_json(j.at("config"));
  if (config_fingerprint(config) != j.at("config_fingerprint").get<std::string>()) {
    throw ValidationError("checkpoint: config fingerprint does not match stored config");
  }
  LoadedModel out{BindingModel(config, meta_from_json(j.at("featurization"))), {}};
  out.model.target_mean = j.at("target_mean").get<double>();
  out.model.target_scale = j.at("target_scale").get<double>();
  auto params = out.model.parameters();
  params_from_json(j.at("parameters"), params, true);
  out.info.epoch = j.at("epoch").get<std::size_t>();
  if (!j.at("best_val_loss").is_null()) out.info.best_val_loss = j.at("best_val_loss").get<double>();
  return out;
}

/// Fails when the dataset was featurized differently from the checkpoint.
inline void require_featurization(const nlohmann::json& checkpoint, const data::DatasetMeta& dataset_meta) {
  const auto stored = checkpoint.at("featurization_fingerprint").get<std::string>();
  const auto actual = featurization_fingerprint(dataset_meta);
  if (stored != actual) {
    throw ValidationError("featurization fingerprint mismatch: checkpoint " + stored + " (" +
                          checkpoint.at("featurization").dump() + ") vs dataset " + actual + " (" +
                          meta_to_json(dataset_meta).dump() + ")");
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(data::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  data::write_text(path, j.dump() + "\n");
}

// Sequence-encoder checkpoints written by MLM pretraining.

inline nlohmann::json save_encoder_checkpoint(const RunConfig& config, data::Alphabet alphabet,
                                              const seq::TransformerEncoder& enc, const seq::MlmHead& head,
                                              std::size_t epoch, double loss) {
  ParamList params;
  enc.collect(params, "seq");
  head.collect(params, "mlm");
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = "sequence_encoder";
  j["config"] = config_entries(config);
  j["config_fingerprint"] = config_fingerprint(config);
  j["alphabet"] = data::to_string(alphabet);
  j["epoch"] = epoch;
  j["mlm_loss"] = loss;
  j["parameters"] = params_to_json(params);
  return j;
}

struct LoadedEncoder {
  RunConfig config;
  data::Alphabet alphabet;
  seq::TransformerEncoder encoder;
  seq::MlmHead head;
};

inline LoadedEncoder load_encoder_checkpoint(const nlohmann::json& j) {
  require_version(j, "sequence_encoder");
  LoadedEncoder out{config_from_json(j.at("config")), data::parse_alphabet(j.at("alphabet").get<std::string>()), {}, {}};
  seq::Vocabulary vocab(out.alphabet);
  Rng rng(0);
  const auto& c = out.config;
  out.encoder = seq::TransformerEncoder({vocab.size(), c.model_dim, c.layers, c.heads, c.ffn_dim, c.max_len, 1e-5}, rng);
  out.head = seq::MlmHead(c.model_dim, vocab.size(), rng);
  ParamList params;
  out.encoder.collect(params, "seq");
  out.head.collect(params, "mlm");
  params_from_json(j.at("parameters"), params, true);
  return out;
}

/// Copies pretrained `seq.*` weights into a model with matching sizes.
inline void load_pretrained_encoder(BindingModel& model, const nlohmann::json& j) {
  require_version(j, "sequence_encoder");
  const auto alphabet = data::parse_alphabet(j.at("alphabet").get<std::string>());
  if (alphabet != model.meta.alphabet) {
    throw ValidationError("pretrained encoder alphabet '" + std::string(data::to_string(alphabet)) +
                          "' does not match dataset alphabet '" + std::string(data::to_string(model.meta.alphabet)) +
                          "'");
  }
  ParamList params;
  model.sequence_encoder.collect(params, "seq");
  params_from_json(j.at("parameters"), params, false);
}

}  // namespace bindfuse::harness

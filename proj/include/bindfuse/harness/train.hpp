// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bindfuse/adam.hpp"
#include "bindfuse/data/dataset.hpp"
#include "bindfuse/data/split.hpp"
#include "bindfuse/fusion/metrics.hpp"
#include "bindfuse/fusion/model.hpp"
#include "bindfuse/harness/checkpoint.hpp"
#include "bindfuse/harness/model.hpp"

namespace bindfuse::harness {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_time = 0.0;  // seconds since training started
};

inline nlohmann::json epoch_to_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"wall_time", e.wall_time}};
}

inline EpochLog epoch_from_json(const nlohmann::json& j) {
  return {j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(), j.at("val_loss").get<double>(),
          j.at("wall_time").get<double>()};
}

/// Split stored with the dataset, else derived from the run seed.
inline data::DatasetSplit resolve_split(const RunConfig& config, const data::Dataset& dataset) {
  auto s = dataset.split ? *dataset.split : data::split(dataset.samples.size(), config.seed, config.fractions());
  if (s.train.empty()) throw ValidationError("train: empty train split");
  if (s.val.empty()) throw ValidationError("train: empty validation split");
  return s;
}

inline std::vector<double> predict_indices(const BindingModel& model, const std::vector<PreparedSample>& samples,
                                           const std::vector<std::size_t>& indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(model.predict(samples[i]));
  return out;
}

inline std::vector<double> labels_of(const std::vector<PreparedSample>& samples, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(samples[i].label);
  return out;
}

/// Mean squared error of frozen predictions; the early-stopping criterion.
inline double mean_squared_error(const BindingModel& model, const std::vector<PreparedSample>& samples,
                                 const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ValidationError("mean_squared_error: empty index set");
  double s = 0.0;
  for (std::size_t i : indices) {
    const double d = model.predict(samples[i]) - samples[i].label;
    s += d * d;
  }
  return s / static_cast<double>(indices.size());
}

struct TrainResult {
  BindingModel model;  // best-epoch parameters
  std::vector<EpochLog> logs;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  data::DatasetSplit split;
  double initial_val_loss = 0.0;
  std::optional<double> initial_val_loss_random;  // set when pretrained weights were loaded
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const std::string&)> on_message;
  /// Sees the live (last-epoch, not best) parameters.
  std::function<void(const BindingModel&, const EpochLog&)> after_epoch;
};

namespace detail {

inline std::vector<std::vector<double>> snapshot(const ParamList& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

inline void restore(ParamList& params, const std::vector<std::vector<double>>& saved) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_values();
    std::copy(saved[i].begin(), saved[i].end(), dst.begin());
  }
}

inline std::string join_ids(const std::vector<PreparedSample>& samples, std::span<const std::size_t> idx) {
  std::string out;
  for (std::size_t i : idx) out += (out.empty() ? "" : ",") + samples[i].id;
  return out;
}

}  // namespace detail

/// Adam on batch losses with early stopping on validation MSE. The returned
/// model holds the best-epoch parameters.
inline TrainResult train(const RunConfig& config, const data::Dataset& dataset, const TrainHooks& hooks = {}) {
  validate(config);
  const auto split = resolve_split(config, dataset);
  const auto samples = prepare_samples(dataset.samples, dataset.meta, config.max_len);

  TrainResult result{BindingModel(config, dataset.meta), {}, 0, std::numeric_limits<double>::infinity(), split, 0.0,
                     std::nullopt};
  BindingModel& model = result.model;
  model.fit_target_scale(labels_of(samples, split.train));
  if (!config.pretrained.empty()) {
    result.initial_val_loss_random = mean_squared_error(model, samples, split.val);
    load_pretrained_encoder(model, read_json_file(config.pretrained));
  }
  result.initial_val_loss = mean_squared_error(model, samples, split.val);
  if (hooks.on_message && result.initial_val_loss_random) {
    hooks.on_message("initial val loss: random " + std::to_string(*result.initial_val_loss_random) +
                     ", pretrained " + std::to_string(result.initial_val_loss) + ", delta " +
                     std::to_string(result.initial_val_loss - *result.initial_val_loss_random));
  }

  auto trainable = model.trainable();
  auto tensors = tensors_of(trainable);
  auto all_params = model.parameters();
  AdamState opt{AdamConfig{.lr = config.lr}};
  auto best = detail::snapshot(all_params);
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    Rng shuffle_rng(mix_seed(config.seed, 0xE90C0000ULL + epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);  // last partial batch kept
      std::span<const std::size_t> batch(order.data() + begin, end - begin);
      zero_grads(trainable);
      std::vector<Tensor> preds, geos;
      std::vector<double> targets;
      for (std::size_t i : batch) {
        auto out = model.forward(samples[i], true, mix_seed(mix_seed(config.seed, epoch), i));
        preds.push_back(out.prediction);
        geos.push_back(out.geo);
        targets.push_back(samples[i].label);
      }
      auto loss = fusion::training_loss(fusion::stack_scalars(preds), Tensor::vector(targets), geos, config.lambda_geo);
      if (!std::isfinite(loss.parts.total)) {
        throw NumericalError("non-finite training loss in epoch " + std::to_string(epoch) + ", batch ids: " +
                             detail::join_ids(samples, batch));
      }
      backward(loss.total);
      try {
        adam_step(tensors, opt);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                             ", batch ids: " + detail::join_ids(samples, batch) + ")");
      }
      loss_sum += loss.parts.total * static_cast<double>(batch.size());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    log.val_loss = mean_squared_error(model, samples, split.val);
    log.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(log.val_loss)) {
      throw NumericalError("non-finite validation loss in epoch " + std::to_string(epoch));
    }
    result.logs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (hooks.after_epoch) hooks.after_epoch(model, log);

    if (log.val_loss < result.best_val_loss) {
      result.best_val_loss = log.val_loss;
      result.best_epoch = epoch;
      best = detail::snapshot(all_params);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  detail::restore(all_params, best);
  return result;
}

inline fusion::Metrics evaluate_indices(const BindingModel& model, const std::vector<PreparedSample>& samples,
                                        const std::vector<std::size_t>& indices) {
  const auto preds = predict_indices(model, samples, indices);
  const auto targets = labels_of(samples, indices);
  return fusion::compute_metrics(preds, targets);
}

enum class SplitName { train, val, test };

inline SplitName parse_split_name(std::string_view s) {
  if (s == "train") return SplitName::train;
  if (s == "val") return SplitName::val;
  if (s == "test") return SplitName::test;
  throw ValidationError("unknown split '" + std::string(s) + "' (expected train|val|test)");
}

inline const std::vector<std::size_t>& split_part(const data::DatasetSplit& s, SplitName which) {
  switch (which) {
    case SplitName::train: return s.train;
    case SplitName::val: return s.val;
    case SplitName::test: return s.test;
  }
  return s.test;
}

/// Frozen metrics for one split of a dataset, using the split the model was trained with.
inline fusion::Metrics evaluate(const BindingModel& model, const data::Dataset& dataset, SplitName which) {
  const auto split = resolve_split(model.config, dataset);
  const auto samples = prepare_samples(dataset.samples, dataset.meta, model.config.max_len);
  const auto& idx = split_part(split, which);
  if (idx.empty()) throw ValidationError("evaluate: split is empty");
  return evaluate_indices(model, samples, idx);
}

/// CSV with header epoch,train_loss,val_loss,wall_time; 17 significant digits.
inline std::string loss_curve_csv(std::span<const EpochLog> logs) {
  if (logs.empty()) throw ValidationError("export_loss_curve: no epochs logged");
  std::string out = "epoch,train_loss,val_loss,wall_time\n";
  char buf[128];
  for (const auto& e : logs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss, e.wall_time);
    out += buf;
  }
  return out;
}

inline std::vector<EpochLog> parse_epoch_log(std::string_view jsonl) {
  std::vector<EpochLog> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < jsonl.size()) {
    const auto nl = jsonl.find('\n', pos);
    const auto line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(epoch_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("epoch log line " + std::to_string(line_no) + ": " + e.what());
    }
    if (out.size() > 1 && out.back().epoch <= out[out.size() - 2].epoch) {
      throw ValidationError("epoch log line " + std::to_string(line_no) + ": epochs must increase");
    }
  }
  return out;
}

}  // namespace bindfuse::harness

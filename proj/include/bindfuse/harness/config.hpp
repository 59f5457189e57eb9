// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Run configuration and its flat `key = value` text form.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "bindfuse/data/split.hpp"
#include "bindfuse/error.hpp"
#include "bindfuse/graph/gin.hpp"
#include "bindfuse/seq/pooling.hpp"

namespace bindfuse::harness {

enum class Ablation { full, graph_only, seq_only };

inline Ablation parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "graph_only") return Ablation::graph_only;
  if (s == "seq_only") return Ablation::seq_only;
  throw ValidationError("unknown ablation '" + std::string(s) + "' (expected full|graph_only|seq_only)");
}

constexpr std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::graph_only: return "graph_only";
    case Ablation::seq_only: return "seq_only";
  }
  return "full";
}

inline graph::Readout parse_readout(std::string_view s) {
  if (s == "sum") return graph::Readout::sum;
  if (s == "mean") return graph::Readout::mean;
  throw ValidationError("unknown readout '" + std::string(s) + "' (expected sum|mean)");
}

constexpr std::string_view to_string(graph::Readout r) { return r == graph::Readout::sum ? "sum" : "mean"; }

struct RunConfig {
  std::uint64_t seed = 1;
  double lr = 1e-4;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double lambda_geo = 0.1;
  std::size_t geo_pairs = 32;
  seq::PoolMode pool_mode = seq::PoolMode::mean;
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  Ablation ablation = Ablation::full;

  // graph encoder
  std::size_t gin_width = 64;
  std::size_t gin_depth = 3;
  graph::Readout readout = graph::Readout::sum;

  // sequence encoder
  std::size_t model_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t max_len = 128;
  bool freeze_sequence_encoder = false;
  std::string pretrained;  // encoder checkpoint, empty for random init

  // mutation window
  bool use_window = true;
  std::size_t window_half_width = 8;
  std::size_t conv_channels = 32;
  std::size_t kernel_width = 3;
  std::size_t lstm_hidden = 32;
  bool window_midpoint_fallback = true;
  std::size_t sequence_out_dim = 64;

  // fusion head
  std::size_t fusion_hidden1 = 64;
  std::size_t fusion_hidden2 = 32;

  // MLM pretraining
  double pretrain_lr = 1e-3;
  std::size_t pretrain_batch_size = 32;
  std::size_t pretrain_epochs = 20;
  double mask_prob = 0.15;

  data::SplitFractions fractions() const { return {train_frac, val_frac, test_frac}; }
};

namespace detail {

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("config: bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("config: bad boolean '" + std::string(text) + "' for " + std::string(key));
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <class T>
Field number_field(T RunConfig::*member, const char* key) {
  return {[member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          },
          [member, key](RunConfig& c, std::string_view v) { c.*member = parse_number<T>(key, v); }};
}

inline Field bool_field(bool RunConfig::*member, const char* key) {
  return {[member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member, key](RunConfig& c, std::string_view v) { c.*member = parse_bool(key, v); }};
}

// Ordered by key; this order also defines the canonical text and fingerprint.
inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["seed"] = number_field(&RunConfig::seed, "seed");
    t["lr"] = number_field(&RunConfig::lr, "lr");
    t["batch_size"] = number_field(&RunConfig::batch_size, "batch_size");
    t["max_epochs"] = number_field(&RunConfig::max_epochs, "max_epochs");
    t["patience"] = number_field(&RunConfig::patience, "patience");
    t["lambda_geo"] = number_field(&RunConfig::lambda_geo, "lambda_geo");
    t["geo_pairs"] = number_field(&RunConfig::geo_pairs, "geo_pairs");
    t["pool_mode"] = {[](const RunConfig& c) { return std::string(seq::to_string(c.pool_mode)); },
                      [](RunConfig& c, std::string_view v) { c.pool_mode = seq::parse_pool_mode(v); }};
    t["train_frac"] = number_field(&RunConfig::train_frac, "train_frac");
    t["val_frac"] = number_field(&RunConfig::val_frac, "val_frac");
    t["test_frac"] = number_field(&RunConfig::test_frac, "test_frac");
    t["ablation"] = {[](const RunConfig& c) { return std::string(to_string(c.ablation)); },
                     [](RunConfig& c, std::string_view v) { c.ablation = parse_ablation(v); }};
    t["gin_width"] = number_field(&RunConfig::gin_width, "gin_width");
    t["gin_depth"] = number_field(&RunConfig::gin_depth, "gin_depth");
    t["readout"] = {[](const RunConfig& c) { return std::string(to_string(c.readout)); },
                    [](RunConfig& c, std::string_view v) { c.readout = parse_readout(v); }};
    t["model_dim"] = number_field(&RunConfig::model_dim, "model_dim");
    t["layers"] = number_field(&RunConfig::layers, "layers");
    t["heads"] = number_field(&RunConfig::heads, "heads");
    t["ffn_dim"] = number_field(&RunConfig::ffn_dim, "ffn_dim");
    t["max_len"] = number_field(&RunConfig::max_len, "max_len");
    t["freeze_sequence_encoder"] = bool_field(&RunConfig::freeze_sequence_encoder, "freeze_sequence_encoder");
    t["pretrained"] = {[](const RunConfig& c) { return c.pretrained; },
                       [](RunConfig& c, std::string_view v) { c.pretrained = std::string(v); }};
    t["use_window"] = bool_field(&RunConfig::use_window, "use_window");
    t["window_half_width"] = number_field(&RunConfig::window_half_width, "window_half_width");
    t["conv_channels"] = number_field(&RunConfig::conv_channels, "conv_channels");
    t["kernel_width"] = number_field(&RunConfig::kernel_width, "kernel_width");
    t["lstm_hidden"] = number_field(&RunConfig::lstm_hidden, "lstm_hidden");
    t["window_midpoint_fallback"] = bool_field(&RunConfig::window_midpoint_fallback, "window_midpoint_fallback");
    t["sequence_out_dim"] = number_field(&RunConfig::sequence_out_dim, "sequence_out_dim");
    t["fusion_hidden1"] = number_field(&RunConfig::fusion_hidden1, "fusion_hidden1");
    t["fusion_hidden2"] = number_field(&RunConfig::fusion_hidden2, "fusion_hidden2");
    t["pretrain_lr"] = number_field(&RunConfig::pretrain_lr, "pretrain_lr");
    t["pretrain_batch_size"] = number_field(&RunConfig::pretrain_batch_size, "pretrain_batch_size");
    t["pretrain_epochs"] = number_field(&RunConfig::pretrain_epochs, "pretrain_epochs");
    t["mask_prob"] = number_field(&RunConfig::mask_prob, "mask_prob");
    return t;
  }();
  return table;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Rejects values that would make a run meaningless.
inline void validate(const RunConfig& c) {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("config: ") + what);
  };
  positive(c.lr > 0 && std::isfinite(c.lr), "lr must be > 0");
  positive(c.batch_size > 0, "batch_size must be > 0");
  positive(c.max_epochs > 0, "max_epochs must be > 0");
  positive(c.patience > 0, "patience must be > 0");
  positive(c.lambda_geo >= 0 && std::isfinite(c.lambda_geo), "lambda_geo must be >= 0");
  positive(c.geo_pairs > 0, "geo_pairs must be > 0");
  positive(c.gin_width > 0 && c.gin_depth > 0, "gin sizes must be > 0");
  positive(c.model_dim > 0 && c.layers > 0 && c.heads > 0 && c.ffn_dim > 0 && c.max_len > 0,
           "sequence encoder sizes must be > 0");
  positive(c.model_dim % c.heads == 0, "model_dim must be divisible by heads");
  positive(c.window_half_width > 0 && c.conv_channels > 0 && c.lstm_hidden > 0 && c.sequence_out_dim > 0,
           "window sizes must be > 0");
  positive(c.kernel_width % 2 == 1, "kernel_width must be odd");
  positive(c.fusion_hidden1 > 0 && c.fusion_hidden2 > 0, "fusion sizes must be > 0");
  positive(c.pretrain_lr > 0 && c.pretrain_batch_size > 0 && c.pretrain_epochs > 0, "pretrain settings must be > 0");
  positive(c.mask_prob >= 0 && c.mask_prob <= 1, "mask_prob must be in [0, 1]");
  positive(c.train_frac > 0 && c.val_frac > 0 && c.test_frac >= 0 &&
               std::abs(c.train_frac + c.val_frac + c.test_frac - 1.0) <= 1e-9,
           "split fractions must be positive and sum to 1");
}

inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  const auto& f = detail::fields();
  auto it = f.find(std::string(key));
  if (it == f.end()) throw ValidationError("config: unknown key '" + std::string(key) + "'");
  it->second.set(c, value);
}

/// `key = value` lines; blank lines and `#` comments are skipped.
inline RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = detail::trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(c, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

inline std::map<std::string, std::string> config_entries(const RunConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : detail::fields()) out[k] = f.get(c);
  return out;
}

/// Every key in sorted order; parse_config(config_to_text(c)) == c.
inline std::string config_to_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
  return out;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_fingerprint(const RunConfig& c) { return hex64(fnv1a(config_to_text(c))); }

}  // namespace bindfuse::harness

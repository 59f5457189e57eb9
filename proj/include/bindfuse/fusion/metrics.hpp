// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bindfuse/error.hpp"

namespace bindfuse::fusion {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;  // NaN when the targets are constant
  std::size_t n = 0;
};

inline Metrics compute_metrics(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(targets.size()) + " targets");
  }
  const std::size_t n = preds.size();
  if (n < 2) throw ValidationError("compute_metrics: need at least 2 samples for r2");
  double abs_sum = 0, sq_sum = 0, mean = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = preds[i] - targets[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    mean += targets[i];
  }
  mean /= static_cast<double>(n);
  double ss_tot = 0;
  for (double y : targets) ss_tot += (y - mean) * (y - mean);
  Metrics m;
  m.n = n;
  m.mae = abs_sum / static_cast<double>(n);
  m.rmse = std::sqrt(sq_sum / static_cast<double>(n));
  if (ss_tot == 0.0) {
    warn("compute_metrics: targets are constant, r2 is undefined");
    m.r2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    m.r2 = 1.0 - sq_sum / ss_tot;
  }
  return m;
}

/// {"model", "mae", "rmse", "r2", "n"}; an undefined r2 is written as null.
inline nlohmann::json metrics_to_json(const std::string& model, const Metrics& m) {
  nlohmann::json j{{"model", model}, {"mae", m.mae}, {"rmse", m.rmse}, {"n", m.n}};
  j["r2"] = std::isnan(m.r2) ? nlohmann::json(nullptr) : nlohmann::json(m.r2);
  return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.mae = j.at("mae").get<double>();
  m.rmse = j.at("rmse").get<double>();
  m.r2 = j.at("r2").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("r2").get<double>();
  m.n = j.at("n").get<std::size_t>();
  return m;
}

struct ReportRow {
  std::string model;
  Metrics metrics;
};

/// Plain-text table: Model, MAE, RMSE, R^2, one row per model.
inline std::string format_metrics_table(std::span<const ReportRow> rows, int precision = 2) {
  auto num = [&](double v) {
    if (std::isnan(v)) return std::string("nan");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cells{{"Model", "MAE", "RMSE", "R^2"}};
  for (const auto& r : rows) cells.push_back({r.model, num(r.metrics.mae), num(r.metrics.rmse), num(r.metrics.r2)});
  std::vector<std::size_t> width(4, 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (c == 0) {
        out += line[c] + std::string(width[c] - line[c].size(), ' ');
      } else {
        out += "  " + std::string(width[c] - line[c].size(), ' ') + line[c];
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace bindfuse::fusion

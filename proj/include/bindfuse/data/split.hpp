// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "bindfuse/error.hpp"
#include "bindfuse/rng.hpp"

namespace bindfuse::data {

struct SplitFractions {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle of 0..n-1 cut into contiguous train/val/test blocks.
///
/// val and test sizes are round-half-up of fraction * n (at least 1 when the
/// fraction is positive); train takes the remainder.
inline DatasetSplit split(std::size_t n, std::uint64_t seed, SplitFractions f = {}) {
  if (n < 3) throw ValidationError("split: need at least 3 samples, got " + std::to_string(n));
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ValidationError("split: fractions must be non-negative and sum to 1");
  }
  auto part = [n](double frac) -> std::size_t {
    if (frac <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 0.5));
    return std::max<std::size_t>(k, 1);
  };
  const std::size_t n_val = part(f.val);
  const std::size_t n_test = part(f.test);
  if (n_val + n_test >= n) throw ValidationError("split: no samples left for training");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x5EEDu));
  rng.shuffle(order);

  DatasetSplit s;
  s.seed = seed;
  const std::size_t n_train = n - n_val - n_test;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

inline nlohmann::json split_to_json(const DatasetSplit& s) {
  return {{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

inline DatasetSplit split_from_json(const nlohmann::json& j, std::size_t n) {
  DatasetSplit s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.val = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("split manifest: ") + e.what());
  }
  std::vector<int> seen(n, 0);
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (std::size_t i : *part) {
      if (i >= n || seen[i]++) throw ValidationError("split manifest is not a partition of 0.." + std::to_string(n - 1));
    }
  for (int c : seen)
    if (c != 1) throw ValidationError("split manifest does not cover every sample");
  return s;
}

}  // namespace bindfuse::data

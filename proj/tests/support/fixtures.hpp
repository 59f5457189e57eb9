// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cstdint>
#include <vector>

#include "bindfuse/data/dataset.hpp"
#include "bindfuse/data/synthetic.hpp"
#include "bindfuse/harness/config.hpp"

namespace bindfuse::testing {

/// Small enough that a full training run takes milliseconds.
inline harness::RunConfig tiny_config() {
  harness::RunConfig c;
  c.gin_width = 8;
  c.gin_depth = 2;
  c.model_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.ffn_dim = 16;
  c.max_len = 64;
  c.window_half_width = 2;
  c.conv_channels = 4;
  c.lstm_hidden = 4;
  c.sequence_out_dim = 8;
  c.fusion_hidden1 = 8;
  c.fusion_hidden2 = 4;
  c.batch_size = 8;
  c.max_epochs = 3;
  c.geo_pairs = 8;
  c.readout = graph::Readout::mean;
  return c;
}

inline data::Dataset synthetic_dataset(std::size_t n, std::uint64_t seed, const data::GeneratorParams& p = {}) {
  return {data::DatasetMeta{data::Alphabet::amino, static_cast<std::size_t>(p.extra_features)},
          data::generate_synthetic(n, seed, p), std::nullopt};
}

inline std::vector<double> flat_parameters(const ParamList& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

}  // namespace bindfuse::testing

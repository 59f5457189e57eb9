// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Local mutation branch and its merge with the global sequence vector:
//   h_local = BiLSTM(ReLU(conv(E[window])))
//   out     = ReLU(P [h_seq || h_local] + c)

#pragma once

#include <string>

#include "bindfuse/mutwin/bilstm.hpp"
#include "bindfuse/mutwin/conv.hpp"
#include "bindfuse/mutwin/window.hpp"
#include "bindfuse/nn.hpp"
#include "bindfuse/seq/transformer.hpp"

namespace bindfuse::mutwin {

struct MutwinConfig {
  std::size_t half_width = 8;
  std::size_t channels = 32;
  std::size_t kernel_width = 3;
  std::size_t lstm_hidden = 32;
  std::size_t output_dim = 64;
  bool midpoint_fallback = true;
};

/// ReLU(P [h_seq || h_local] + c); with P = [I | 0] a zero h_local passes h_seq through.
inline Tensor combine_local_global(const Affine& projection, const Tensor& h_local, const Tensor& h_seq) {
  auto joined = concat_vec(h_seq, h_local);
  if (joined.size() != projection.in_features()) {
    throw ShapeError("combine_local_global: joined width " + std::to_string(joined.size()) + " != " +
                     std::to_string(projection.in_features()));
  }
  return relu(projection.apply_vec(joined));
}

struct MutationBranch {
  MutwinConfig config;
  Conv1dLayer conv;
  BiLstm lstm;
  Affine projection;

  MutationBranch() = default;
  MutationBranch(const MutwinConfig& c, std::size_t embed_dim, std::size_t seq_dim, Rng& rng)
      : config(c),
        conv(embed_dim, c.channels, c.kernel_width, rng),
        lstm(c.channels, c.lstm_hidden, rng),
        projection(seq_dim + 2 * c.lstm_hidden, c.output_dim, rng) {}

  /// h_local for one sequence; zeros when there is no window to read.
  Tensor local(const seq::TransformerEncoder& enc, const seq::TokenizedSequence& s, std::size_t pad_id) const {
    const auto center = window_center(s, config.midpoint_fallback);
    if (!center) return Tensor::zeros({lstm.output_size()});
    const auto w = extract_window(s.ids, *center, config.half_width, pad_id);
    return lstm(conv(enc.embed(w.token_ids)));
  }

  Tensor combine(const Tensor& h_local, const Tensor& h_seq) const {
    return combine_local_global(projection, h_local, h_seq);
  }

  void collect(ParamList& params, const std::string& prefix) const {
    conv.collect(params, prefix + ".conv");
    lstm.collect(params, prefix + ".lstm");
    projection.collect(params, prefix + ".projection");
  }
};

}  // namespace bindfuse::mutwin

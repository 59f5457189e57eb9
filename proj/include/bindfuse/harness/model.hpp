// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// The two-branch affinity model:
//   h_complex = GIN(graph)
//   h_seq     = ReLU(P [pool(Transformer(tokens)) || BiLSTM(conv(E[window]))])
//   y         = target_mean + target_scale * MLP([h_complex || h_seq])

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bindfuse/data/dataset.hpp"
#include "bindfuse/fusion/model.hpp"
#include "bindfuse/graph/geometry.hpp"
#include "bindfuse/graph/gin.hpp"
#include "bindfuse/graph/molecular_graph.hpp"
#include "bindfuse/harness/config.hpp"
#include "bindfuse/mutwin/branch.hpp"
#include "bindfuse/seq/pooling.hpp"
#include "bindfuse/seq/transformer.hpp"
#include "bindfuse/seq/vocabulary.hpp"

namespace bindfuse::harness {

struct PreparedSample {
  std::string id;
  graph::MolecularGraph graph;
  seq::TokenizedSequence tokens;
  double label = 0.0;
};

inline std::string featurization_fingerprint(const data::DatasetMeta& meta) {
  return hex64(fnv1a("alphabet=" + std::string(data::to_string(meta.alphabet)) +
                     ";extra_features=" + std::to_string(meta.extra_features)));
}

inline PreparedSample prepare_sample(const data::ComplexRecord& complex, const data::SequenceRecord& sequence,
                                     double label, const data::DatasetMeta& meta, const seq::Vocabulary& vocab,
                                     std::size_t max_len) {
  return {complex.id, graph::featurize(complex, meta.extra_features), seq::tokenize(sequence, vocab, max_len), label};
}

inline std::vector<PreparedSample> prepare_samples(const std::vector<data::PairedSample>& samples,
                                                   const data::DatasetMeta& meta, std::size_t max_len) {
  seq::Vocabulary vocab(meta.alphabet);
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(prepare_sample(s.complex, s.sequence, s.label, meta, vocab, max_len));
  return out;
}

struct ModelOutput {
  Tensor prediction;  // scalar
  Tensor geo;         // scalar regularizer term, 0 when not requested
};

class BindingModel {
 public:
  RunConfig config;
  data::DatasetMeta meta;
  seq::Vocabulary vocab;
  graph::GinEncoder graph_encoder;
  seq::TransformerEncoder sequence_encoder;
  seq::AttentionPooler pooler;
  mutwin::MutationBranch window_branch;
  fusion::FusionMlp head;
  double target_mean = 0.0;
  double target_scale = 1.0;

  BindingModel(const RunConfig& c, const data::DatasetMeta& m) : config(c), meta(m), vocab(m.alphabet) {
    validate(c);
    Rng rng(mix_seed(c.seed, 0xB14DULL));
    graph_encoder = graph::GinEncoder(graph::node_feature_width(m.extra_features), c.gin_width, c.gin_depth,
                                      c.readout, rng);
    seq::TransformerConfig tc{vocab.size(), c.model_dim, c.layers, c.heads, c.ffn_dim, c.max_len, 1e-5};
    sequence_encoder = seq::TransformerEncoder(tc, rng);
    pooler = seq::AttentionPooler(c.model_dim, rng);
    mutwin::MutwinConfig wc{c.window_half_width, c.conv_channels, c.kernel_width, c.lstm_hidden,
                            c.sequence_out_dim, c.window_midpoint_fallback};
    window_branch = mutwin::MutationBranch(wc, c.model_dim, c.model_dim, rng);
    head = fusion::FusionMlp(fusion::FusionConfig{c.gin_width, c.sequence_out_dim, c.fusion_hidden1, c.fusion_hidden2},
                             rng);
  }

  Tensor sequence_embedding(const seq::TokenizedSequence& tokens) const {
    auto h = sequence_encoder.forward(tokens.ids);
    auto h_seq = seq::pool(h, config.pool_mode, &pooler);
    auto h_local = config.use_window ? window_branch.local(sequence_encoder, tokens, vocab.pad_id())
                                     : Tensor::zeros({2 * config.lstm_hidden});
    return window_branch.combine(h_local, h_seq);
  }

  ModelOutput forward(const PreparedSample& s, bool with_geo = false, std::uint64_t geo_seed = 0) const {
    Tensor h_complex, h_seq, geo = Tensor::scalar(0.0);
    if (config.ablation == Ablation::seq_only) {
      h_complex = Tensor::zeros({config.gin_width});
    } else {
      auto enc = graph_encoder.encode(s.graph);
      h_complex = enc.pooled;
      if (with_geo && config.lambda_geo > 0.0)
        geo = graph::geometry_regularizer(graph_encoder, enc.nodes, s.graph.coords, config.geo_pairs, geo_seed);
    }
    h_seq = config.ablation == Ablation::graph_only ? Tensor::zeros({config.sequence_out_dim})
                                                    : sequence_embedding(s.tokens);
    auto raw = fusion::fuse_predict(head, h_complex, h_seq);
    return {add_scalar(scale(raw, target_scale), target_mean), geo};
  }

  double predict(const PreparedSample& s) const {
    NoGradGuard guard;
    return forward(s).prediction.item();
  }

  /// Every parameter, each name exactly once.
  ParamList parameters() const {
    ParamList p;
    graph_encoder.collect(p, "graph");
    sequence_encoder.collect(p, "seq");
    pooler.collect(p, "pool");
    window_branch.collect(p, "window");
    head.collect(p, "fusion");
    return p;
  }

  /// Parameters the optimizer updates under the configured ablation.
  ParamList trainable() const {
    ParamList p;
    if (config.ablation != Ablation::seq_only) graph_encoder.collect(p, "graph");
    if (config.ablation != Ablation::graph_only) {
      if (!config.freeze_sequence_encoder) sequence_encoder.collect(p, "seq");
      if (config.pool_mode == seq::PoolMode::attention) pooler.collect(p, "pool");
      if (config.use_window) {
        window_branch.collect(p, "window");
      } else {
        window_branch.projection.collect(p, "window.projection");
      }
    }
    head.collect(p, "fusion");
    return p;
  }

  /// Output standardisation from the training labels.
  void fit_target_scale(const std::vector<double>& labels) {
    if (labels.empty()) return;
    double mean = 0.0;
    for (double y : labels) mean += y;
    mean /= static_cast<double>(labels.size());
    double var = 0.0;
    for (double y : labels) var += (y - mean) * (y - mean);
    var /= static_cast<double>(labels.size());
    target_mean = mean;
    target_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  }
};

}  // namespace bindfuse::harness

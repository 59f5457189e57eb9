// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Masked-language-model pretraining for the sequence encoder.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bindfuse/adam.hpp"
#include "bindfuse/nn.hpp"
#include "bindfuse/rng.hpp"
#include "bindfuse/seq/transformer.hpp"
#include "bindfuse/seq/vocabulary.hpp"

namespace bindfuse::seq {

struct MlmHead {
  Affine projection;  // d -> vocab

  MlmHead() = default;
  MlmHead(std::size_t d, std::size_t vocab, Rng& rng) : projection(d, vocab, rng) {
    // Small logits at start: the untrained loss sits near ln(vocab).
    for (double& w : projection.weight.mutable_values()) w = rng.normal(0.0, 0.02);
  }

  Tensor logits(const Tensor& h) const { return projection(h); }

  void collect(ParamList& params, const std::string& prefix) const { projection.collect(params, prefix + ".projection"); }
};

struct MaskConfig {
  double mask_prob = 0.15;
  /// Of the selected positions: this share becomes MASK, `random_frac` a
  /// random alphabet symbol, the rest stays unchanged.
  double mask_frac = 0.8;
  double random_frac = 0.1;
};

struct MaskedTokens {
  std::vector<std::size_t> ids;      // corrupted input
  std::vector<std::size_t> targets;  // positions to predict, ascending
  std::vector<std::size_t> labels;   // original ids at `targets`
};

/// Independent per-position selection; at least one target is always forced.
inline MaskedTokens mlm_mask(const std::vector<std::size_t>& tokens, std::uint64_t seed, const Vocabulary& vocab,
                             const MaskConfig& cfg = {}) {
  if (tokens.empty()) throw ValidationError("mlm_mask: empty sequence");
  Rng rng(seed);
  MaskedTokens m;
  m.ids = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (rng.uniform() < cfg.mask_prob) m.targets.push_back(i);
  if (m.targets.empty()) m.targets.push_back(rng.uniform_index(tokens.size()));
  for (std::size_t pos : m.targets) {
    m.labels.push_back(tokens[pos]);
    const double u = rng.uniform();
    if (u < cfg.mask_frac) {
      m.ids[pos] = vocab.mask_id();
    } else if (u < cfg.mask_frac + cfg.random_frac) {
      m.ids[pos] = rng.uniform_index(vocab.alphabet_size());
    }
  }
  return m;
}

struct MlmStats {
  double loss = 0.0;  // mean cross-entropy over all target positions
  std::size_t correct = 0;
  std::size_t targets = 0;

  double accuracy() const { return targets ? static_cast<double>(correct) / static_cast<double>(targets) : 0.0; }
};

namespace detail {

inline std::size_t argmax_row(const Tensor& logits, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.cols(); ++j)
    if (logits.at(r, j) > logits.at(r, best)) best = j;
  return best;
}

/// Forward (and optionally backward) over a batch; gradients of the batch-mean
/// loss accumulate into the parameters.
inline MlmStats mlm_pass(const TransformerEncoder& enc, const MlmHead& head,
                         std::span<const TokenizedSequence> batch, std::uint64_t seed, const Vocabulary& vocab,
                         const MaskConfig& cfg, bool accumulate_grads) {
  if (batch.empty()) throw ValidationError("mlm: empty batch");
  std::vector<MaskedTokens> masked;
  std::size_t total = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    masked.push_back(mlm_mask(batch[b].ids, mix_seed(seed, b), vocab, cfg));
    total += masked.back().targets.size();
  }
  MlmStats stats;
  stats.targets = total;
  for (const auto& m : masked) {
    auto h = enc.forward(m.ids);
    auto logits = head.logits(gather_rows(h, m.targets));
    auto ce = cross_entropy_rows(logits, m.labels);
    const double weight = static_cast<double>(m.targets.size()) / static_cast<double>(total);
    stats.loss += ce.item() * weight;
    for (std::size_t r = 0; r < m.targets.size(); ++r)
      if (argmax_row(logits, r) == m.labels[r]) ++stats.correct;
    if (accumulate_grads) backward(scale(ce, weight));
  }
  return stats;
}

}  // namespace detail

/// Loss and masked-token accuracy without touching gradients.
inline MlmStats mlm_evaluate(const TransformerEncoder& enc, const MlmHead& head,
                             std::span<const TokenizedSequence> batch, std::uint64_t seed, const Vocabulary& vocab,
                             const MaskConfig& cfg = {}) {
  return detail::mlm_pass(enc, head, batch, seed, vocab, cfg, false);
}

/// One optimizer step on the mean cross-entropy at masked positions.
inline MlmStats pretrain_step(TransformerEncoder& enc, MlmHead& head, std::span<const TokenizedSequence> batch,
                              AdamState& opt, std::uint64_t seed, const Vocabulary& vocab,
                              const MaskConfig& cfg = {}) {
  ParamList params;
  enc.collect(params, "seq");
  head.collect(params, "mlm");
  zero_grads(params);
  auto stats = detail::mlm_pass(enc, head, batch, seed, vocab, cfg, true);
  if (!std::isfinite(stats.loss)) throw NumericalError("pretrain_step: non-finite MLM loss");
  auto tensors = tensors_of(params);
  adam_step(tensors, opt);
  return stats;
}

}  // namespace bindfuse::seq

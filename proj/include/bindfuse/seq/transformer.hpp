// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Small post-norm transformer encoder.
//
//   X0 = E[ids] + PE[0..n)
//   per block:
//     A  = MultiHead(X)                    heads of width d/h, scaled dot product
//     X' = LayerNorm(X + A)                eps 1e-5
//     X  = LayerNorm(X' + W2 ReLU(W1 X'))
//
// PE is the sinusoidal table PE[p, 2i] = sin(p / 10000^(2i/d)),
// PE[p, 2i+1] = cos(p / 10000^(2i/d)).

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bindfuse/nn.hpp"
#include "bindfuse/rng.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::seq {

struct TransformerConfig {
  std::size_t vocab_size = 23;
  std::size_t model_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t max_len = 128;
  double layer_norm_eps = 1e-5;
};

inline Tensor sinusoidal_table(std::size_t max_len, std::size_t d) {
  std::vector<double> pe(max_len * d);
  for (std::size_t p = 0; p < max_len; ++p)
    for (std::size_t i = 0; i < d; i += 2) {
      const double angle =
          static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      pe[p * d + i] = std::sin(angle);
      if (i + 1 < d) pe[p * d + i + 1] = std::cos(angle);
    }
  return Tensor::from({max_len, d}, std::move(pe));
}

/// Softmax weight matrices recorded during a forward pass, layer-major then head.
struct AttentionTrace {
  std::vector<Tensor> weights;
};

struct EncoderBlock {
  Affine query, key, value, out;
  Tensor ln1_gain, ln1_bias;
  Affine ffn_in, ffn_out;
  Tensor ln2_gain, ln2_bias;

  EncoderBlock() = default;
  EncoderBlock(const TransformerConfig& c, Rng& rng)
      : query(c.model_dim, c.model_dim, rng),
        key(c.model_dim, c.model_dim, rng),
        value(c.model_dim, c.model_dim, rng),
        out(c.model_dim, c.model_dim, rng),
        ln1_gain(init::constant({c.model_dim}, 1.0)),
        ln1_bias(init::constant({c.model_dim}, 0.0)),
        ffn_in(c.model_dim, c.ffn_dim, rng),
        ffn_out(c.ffn_dim, c.model_dim, rng),
        ln2_gain(init::constant({c.model_dim}, 1.0)),
        ln2_bias(init::constant({c.model_dim}, 0.0)) {}

  Tensor forward(const Tensor& x, std::size_t heads, double ln_eps, AttentionTrace* trace) const {
    const std::size_t d = x.cols();
    const std::size_t dh = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    auto q = query(x), k = key(x), v = value(x);
    std::vector<Tensor> per_head;
    per_head.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      auto qh = slice_cols(q, h * dh, dh);
      auto kh = slice_cols(k, h * dh, dh);
      auto vh = slice_cols(v, h * dh, dh);
      auto weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
      if (trace) trace->weights.push_back(weights);
      per_head.push_back(matmul(weights, vh));
    }
    auto attended = out(concat_cols(per_head));
    auto x1 = layer_norm(add(x, attended), ln1_gain, ln1_bias, ln_eps);
    auto ff = ffn_out(relu(ffn_in(x1)));
    return layer_norm(add(x1, ff), ln2_gain, ln2_bias, ln_eps);
  }

  void collect(ParamList& params, const std::string& prefix) const {
    query.collect(params, prefix + ".query");
    key.collect(params, prefix + ".key");
    value.collect(params, prefix + ".value");
    out.collect(params, prefix + ".out");
    params.push_back({prefix + ".ln1.gain", ln1_gain});
    params.push_back({prefix + ".ln1.bias", ln1_bias});
    ffn_in.collect(params, prefix + ".ffn_in");
    ffn_out.collect(params, prefix + ".ffn_out");
    params.push_back({prefix + ".ln2.gain", ln2_gain});
    params.push_back({prefix + ".ln2.bias", ln2_bias});
  }
};

// Token embeddings start small next to the unit-amplitude positional table so
// position is readable early in training.
inline constexpr double kEmbeddingInitSd = 0.3;

struct TransformerEncoder {
  TransformerConfig config;
  Tensor embedding;   // [vocab x d]
  Tensor positional;  // [max_len x d], constant
  std::vector<EncoderBlock> blocks;

  TransformerEncoder() = default;
  TransformerEncoder(const TransformerConfig& c, Rng& rng) : config(c) {
    if (c.heads == 0 || c.model_dim % c.heads != 0)
      throw ValidationError("transformer: model_dim must be divisible by heads");
    embedding = init::normal({c.vocab_size, c.model_dim}, kEmbeddingInitSd, rng);
    positional = sinusoidal_table(c.max_len, c.model_dim);
    for (std::size_t l = 0; l < c.layers; ++l) blocks.emplace_back(c, rng);
  }

  std::size_t model_dim() const { return config.model_dim; }

  /// Embedding rows for `ids` (also used by the mutation-window branch).
  Tensor embed(const std::vector<std::size_t>& ids) const { return gather_rows(embedding, ids); }

  /// Residue-level representation H [n x d].
  Tensor forward(const std::vector<std::size_t>& ids, AttentionTrace* trace = nullptr) const {
    const std::size_t n = ids.size();
    if (n == 0) throw ValidationError("encoder_forward: empty token sequence");
    if (n > config.max_len) {
      throw ValidationError("encoder_forward: " + std::to_string(n) + " tokens exceed max_len " +
                            std::to_string(config.max_len));
    }
    const std::size_t d = config.model_dim;
    std::vector<double> pe(positional.values().begin(),
                           positional.values().begin() + static_cast<std::ptrdiff_t>(n * d));
    Tensor x = add(embed(ids), Tensor::from({n, d}, std::move(pe)));
    for (const auto& b : blocks) x = b.forward(x, config.heads, config.layer_norm_eps, trace);
    return x;
  }

  void collect(ParamList& params, const std::string& prefix) const {
    params.push_back({prefix + ".embedding", embedding});
    for (std::size_t l = 0; l < blocks.size(); ++l) blocks[l].collect(params, prefix + ".block" + std::to_string(l));
  }
};

}  // namespace bindfuse::seq

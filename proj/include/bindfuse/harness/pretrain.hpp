// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "bindfuse/adam.hpp"
#include "bindfuse/data/alphabet.hpp"
#include "bindfuse/harness/config.hpp"
#include "bindfuse/seq/mlm.hpp"
#include "bindfuse/seq/transformer.hpp"

namespace bindfuse::harness {

/// One sequence per line; blank lines are skipped, other symbols rejected.
inline std::vector<std::string> parse_corpus(std::string_view text, data::Alphabet alphabet) {
  std::vector<std::string> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (!data::in_alphabet(alphabet, line[c])) {
        throw ValidationError("corpus line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                              ": illegal character '" + std::string(1, line[c]) + "' for " +
                              std::string(data::to_string(alphabet)) + " alphabet");
      }
    }
    out.push_back(std::move(line));
  }
  return out;
}

struct PretrainLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double wall_time = 0.0;
};

struct PretrainResult {
  seq::TransformerEncoder encoder;
  seq::MlmHead head;
  std::vector<PretrainLog> logs;
};

/// MLM over the corpus for `pretrain_epochs` shuffled passes.
inline PretrainResult pretrain(const RunConfig& config, const std::vector<std::string>& corpus,
                               data::Alphabet alphabet, const std::function<void(const PretrainLog&)>& on_epoch = {}) {
  validate(config);
  if (corpus.empty()) throw ValidationError("pretrain: empty corpus");
  seq::Vocabulary vocab(alphabet);
  std::vector<seq::TokenizedSequence> tokens;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    tokens.push_back(seq::tokenize({"line" + std::to_string(i + 1), corpus[i], std::nullopt}, vocab, config.max_len));

  Rng rng(mix_seed(config.seed, 0x9E7ULL));
  PretrainResult result{
      seq::TransformerEncoder({vocab.size(), config.model_dim, config.layers, config.heads, config.ffn_dim,
                               config.max_len, 1e-5},
                              rng),
      {}, {}};
  result.head = seq::MlmHead(config.model_dim, vocab.size(), rng);
  AdamState opt{AdamConfig{.lr = config.pretrain_lr}};
  seq::MaskConfig mask{config.mask_prob, 0.8, 0.1};
  const auto start = std::chrono::steady_clock::now();
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    std::vector<std::size_t> order(tokens.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(config.seed, 0x9E70000ULL + epoch));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0, targets = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.pretrain_batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.pretrain_batch_size);
      std::vector<seq::TokenizedSequence> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(tokens[order[k]]);
      auto stats = seq::pretrain_step(result.encoder, result.head, batch, opt, mix_seed(config.seed, ++step), vocab,
                                      mask);
      loss_sum += stats.loss * static_cast<double>(stats.targets);
      correct += stats.correct;
      targets += stats.targets;
    }
    PretrainLog log{epoch, loss_sum / static_cast<double>(targets),
                    static_cast<double>(correct) / static_cast<double>(targets),
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    result.logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace bindfuse::harness

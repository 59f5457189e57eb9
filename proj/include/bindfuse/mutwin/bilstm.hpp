// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// LSTM gates, packed in the order input, forget, output, candidate:
//   i = s(x Wi + h Ui + bi)    f = s(x Wf + h Uf + bf)    o = s(x Wo + h Uo + bo)
//   g = tanh(x Wg + h Ug + bg)
//   c' = f * c + i * g         h' = o * tanh(c')
// with s the logistic sigmoid and h = c = 0 before the first step.

#pragma once

#include <string>

#include "bindfuse/nn.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::mutwin {

struct LstmCell {
  Tensor input_weight;      // [in x 4H]
  Tensor recurrent_weight;  // [H x 4H]
  Tensor bias;              // [4H]

  LstmCell() = default;
  LstmCell(std::size_t in, std::size_t hidden, Rng& rng)
      : input_weight(init::glorot({in, 4 * hidden}, in, hidden, rng)),
        recurrent_weight(init::glorot({hidden, 4 * hidden}, hidden, hidden, rng)),
        bias(init::constant({4 * hidden}, 0.0)) {
    auto b = bias.mutable_values();
    for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  }

  std::size_t hidden_size() const { return recurrent_weight.rows(); }

  /// Final hidden state [H] after consuming the rows of x in the given order.
  Tensor run(const Tensor& x, bool reverse) const {
    const std::size_t steps = x.rows(), hs = hidden_size();
    if (steps == 0) throw ValidationError("bilstm_forward: empty input");
    if (x.cols() != input_weight.rows()) {
      throw ShapeError("bilstm_forward: input width " + std::to_string(x.cols()) + " != " +
                       std::to_string(input_weight.rows()));
    }
    const auto projected = add_row(matmul(x, input_weight), bias);  // [T x 4H]
    Tensor h = Tensor::zeros({1, hs});
    Tensor c = Tensor::zeros({1, hs});
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = reverse ? steps - 1 - s : s;
      auto gates = add(reshape(row(projected, t), {1, 4 * hs}), matmul(h, recurrent_weight));
      auto in = sigmoid(slice_cols(gates, 0, hs));
      auto forget = sigmoid(slice_cols(gates, hs, hs));
      auto out = sigmoid(slice_cols(gates, 2 * hs, hs));
      auto cand = tanh(slice_cols(gates, 3 * hs, hs));
      c = add(mul(forget, c), mul(in, cand));
      h = mul(out, tanh(c));
    }
    return reshape(h, {hs});
  }

  void collect(ParamList& params, const std::string& prefix) const {
    params.push_back({prefix + ".input_weight", input_weight});
    params.push_back({prefix + ".recurrent_weight", recurrent_weight});
    params.push_back({prefix + ".bias", bias});
  }
};

struct BiLstm {
  LstmCell forward_cell;
  LstmCell backward_cell;

  BiLstm() = default;
  BiLstm(std::size_t in, std::size_t hidden, Rng& rng) : forward_cell(in, hidden, rng), backward_cell(in, hidden, rng) {}

  std::size_t output_size() const { return forward_cell.hidden_size() + backward_cell.hidden_size(); }

  /// [h_fwd_final || h_bwd_final]
  Tensor operator()(const Tensor& x) const { return concat_vec(forward_cell.run(x, false), backward_cell.run(x, true)); }

  void collect(ParamList& params, const std::string& prefix) const {
    forward_cell.collect(params, prefix + ".forward");
    backward_cell.collect(params, prefix + ".backward");
  }
};

}  // namespace bindfuse::mutwin

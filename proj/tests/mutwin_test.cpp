// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#include <gtest/gtest.h>

#include <cmath>

#include "bindfuse/mutwin/branch.hpp"
#include "support/gradcheck.hpp"

namespace bindfuse::mutwin {
namespace {

constexpr std::size_t kPad = 20;

std::vector<std::size_t> iota_tokens(std::size_t n) {
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = i % 20;
  return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar-loop LSTM over rows of x (optionally reversed).
std::vector<double> naive_lstm(const LstmCell& cell, const Tensor& x, bool reverse) {
  const std::size_t hs = cell.hidden_size(), in = x.cols(), steps = x.rows();
  std::vector<double> h(hs, 0.0), c(hs, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    std::vector<double> z(4 * hs);
    for (std::size_t j = 0; j < 4 * hs; ++j) {
      double acc = cell.bias.values()[j];
      for (std::size_t k = 0; k < in; ++k) acc += x.at(t, k) * cell.input_weight.at(k, j);
      for (std::size_t k = 0; k < hs; ++k) acc += h[k] * cell.recurrent_weight.at(k, j);
      z[j] = acc;
    }
    for (std::size_t j = 0; j < hs; ++j) {
      const double i = sig(z[j]), f = sig(z[hs + j]), o = sig(z[2 * hs + j]), g = std::tanh(z[3 * hs + j]);
      c[j] = f * c[j] + i * g;
      h[j] = o * std::tanh(c[j]);
    }
  }
  return h;
}

TEST(ExtractWindow, LeftBoundary) {
  auto tokens = iota_tokens(10);
  auto w = extract_window(tokens, 0, 2, kPad);
  EXPECT_EQ(w.token_ids, (std::vector<std::size_t>{kPad, kPad, 0, 1, 2}));
  EXPECT_EQ(w.padded, (std::vector<bool>{true, true, false, false, false}));
}

TEST(ExtractWindow, RightBoundary) {
  auto w = extract_window(iota_tokens(10), 9, 2, kPad);
  EXPECT_EQ(w.token_ids, (std::vector<std::size_t>{7, 8, 9, kPad, kPad}));
}

TEST(ExtractWindow, InteriorIsVerbatim) {
  auto tokens = iota_tokens(30);
  auto w = extract_window(tokens, 15, 8, kPad);
  EXPECT_EQ(w.token_ids, std::vector<std::size_t>(tokens.begin() + 7, tokens.begin() + 24));
  for (bool p : w.padded) EXPECT_FALSE(p);
}

TEST(ExtractWindow, LengthSweep) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40), k = 1 + rng.uniform_index(12), t = rng.uniform_index(n);
    auto tokens = iota_tokens(n);
    auto w = extract_window(tokens, t, k, kPad);
    ASSERT_EQ(w.token_ids.size(), 2 * k + 1);
    for (std::size_t i = 0; i < w.token_ids.size(); ++i) {
      const long pos = static_cast<long>(t) - static_cast<long>(k) + static_cast<long>(i);
      const bool inside = pos >= 0 && pos < static_cast<long>(n);
      EXPECT_EQ(w.token_ids[i], inside ? tokens[pos] : kPad);
    }
  }
}

TEST(ExtractWindow, Errors) {
  EXPECT_THROW(extract_window(iota_tokens(5), 5, 2, kPad), ValidationError);
  EXPECT_THROW(extract_window(iota_tokens(5), 2, 0, kPad), ValidationError);
}

TEST(ExtractWindow, CenterFallback) {
  seq::TokenizedSequence s{iota_tokens(9), std::nullopt, false};
  EXPECT_EQ(window_center(s, true), 4u);
  EXPECT_EQ(window_center(s, false), std::nullopt);
  s.mutation_pos = 2;
  EXPECT_EQ(window_center(s, false), 2u);
}

TEST(Conv, ZeroInputZeroOutput) {
  Rng rng(1);
  Conv1dLayer conv(5, 32, 3, rng);
  auto y = conv(Tensor::zeros({17, 5}));
  ASSERT_EQ(y.shape(), (Shape{17, 32}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv, IdentityTap) {
  Conv1dLayer conv;
  conv.kernels = Tensor::from({1, 1, 3}, {0, 1, 0}, true);
  conv.bias = Tensor::from({1}, {0}, true);
  auto y = conv.pre_activation(Tensor::from({3, 1}, {1, 2, 3}));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), (std::vector<double>{1, 2, 3}));
}

TEST(Conv, LargeNegativeBiasClamps) {
  Rng rng(2);
  Conv1dLayer conv(4, 6, 3, rng);
  for (double& b : conv.bias.mutable_values()) b = -1e6;
  auto y = conv(testing::random_leaf({9, 4}, rng));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv, LinearWithoutBias) {
  Rng rng(3);
  Conv1dLayer conv(4, 6, 5, rng);
  auto x = testing::random_leaf({11, 4}, rng);
  for (double c : {-2.5, 0.0, 0.3, 7.0}) {
    auto a = conv.pre_activation(scale(x, c));
    auto b = scale(conv.pre_activation(x), c);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-10);
  }
}

TEST(Conv, RejectsWidthMismatchAndEvenKernel) {
  Rng rng(3);
  Conv1dLayer conv(4, 6, 3, rng);
  EXPECT_THROW(conv(Tensor::zeros({5, 3})), ShapeError);
  EXPECT_THROW(Conv1dLayer(4, 6, 4, rng), ValidationError);
}

TEST(BiLstm, ZeroWeightsGiveZeros) {
  Rng rng(5);
  BiLstm lstm(6, 32, rng);
  for (auto* cell : {&lstm.forward_cell, &lstm.backward_cell})
    for (auto* t : {&cell->input_weight, &cell->recurrent_weight, &cell->bias})
      for (double& v : t->mutable_values()) v = 0.0;
  auto y = lstm(testing::random_leaf({7, 6}, rng));
  ASSERT_EQ(y.shape(), (Shape{64}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(BiLstm, ForgetBiasStartsAtOne) {
  Rng rng(5);
  LstmCell cell(3, 4, rng);
  const auto& b = cell.bias.values();
  for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(b[j], (j >= 4 && j < 8) ? 1.0 : 0.0);
}

TEST(BiLstm, MatchesScalarReference) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    BiLstm lstm(5, 7, rng);
    auto x = testing::random_leaf({1 + rng.uniform_index(12), 5}, rng, -2, 2);
    auto y = lstm(x);
    auto f = naive_lstm(lstm.forward_cell, x, false);
    auto b = naive_lstm(lstm.backward_cell, x, true);
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_NEAR(y.values()[j], f[j], 1e-12);
      EXPECT_NEAR(y.values()[7 + j], b[j], 1e-12);
    }
  }
}

TEST(BiLstm, SingleStepCellsSeeSameInput) {
  Rng rng(7);
  BiLstm lstm(4, 3, rng);
  lstm.backward_cell = lstm.forward_cell;
  auto y = lstm(testing::random_leaf({1, 4}, rng));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(y.values()[j], y.values()[3 + j]);
}

TEST(BiLstm, DirectionSymmetry) {
  Rng rng(8);
  BiLstm lstm(4, 5, rng);
  auto x = testing::random_leaf({9, 4}, rng);
  std::vector<std::size_t> rev(9);
  for (std::size_t i = 0; i < 9; ++i) rev[i] = 8 - i;
  auto x_rev = gather_rows(x, rev);
  BiLstm swapped;
  swapped.forward_cell = lstm.backward_cell;
  swapped.backward_cell = lstm.forward_cell;
  auto a = lstm(x);
  auto b = swapped(x_rev);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_NEAR(a.values()[j], b.values()[5 + j], 1e-12);
    EXPECT_NEAR(a.values()[5 + j], b.values()[j], 1e-12);
  }
}

TEST(BiLstm, GradientThroughAllGates) {
  Rng rng(9);
  BiLstm lstm(4, 3, rng);
  auto x = testing::random_leaf({3, 4}, rng);
  ParamList params;
  lstm.collect(params, "lstm");
  auto leaves = tensors_of(params);
  leaves.push_back(x);
  auto r = testing::check_gradients([&] { return testing::weighted_sum(lstm(x), 4); }, leaves);
  EXPECT_LT(r.max_rel_err, 1e-4) << r.worst;
}

TEST(Combine, PassThroughDouble) {
  Affine proj;
  std::vector<double> w(128 * 64, 0.0);
  for (std::size_t i = 0; i < 64; ++i) w[i * 64 + i] = 1.0;  // [I | 0] on [h_seq || h_local]
  proj.weight = Tensor::from({128, 64}, w, true);
  proj.bias = Tensor::zeros({64}, true);
  Rng rng(10);
  auto h_seq = testing::random_leaf({64}, rng);
  auto out = combine_local_global(proj, Tensor::zeros({64}), h_seq);
  ASSERT_EQ(out.shape(), (Shape{64}));
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(out.values()[i], std::max(h_seq.values()[i], 0.0));
}

TEST(Combine, GradientReachesBothInputs) {
  Rng rng(11);
  Affine proj(128, 64, rng);
  auto h_local = testing::random_leaf({64}, rng);
  auto h_seq = testing::random_leaf({64}, rng);
  auto out = combine_local_global(proj, h_local, h_seq);
  EXPECT_EQ(out.shape(), (Shape{64}));
  backward(testing::weighted_sum(out, 2));
  auto nonzero = [](const Tensor& t) {
    for (double g : t.grad())
      if (g != 0.0) return true;
    return false;
  };
  EXPECT_TRUE(nonzero(h_local));
  EXPECT_TRUE(nonzero(h_seq));
}

TEST(Branch, EndToEndGradient) {
  Rng rng(12);
  seq::TransformerConfig tc;
  tc.vocab_size = 8;
  tc.model_dim = 6;
  tc.heads = 2;
  tc.layers = 1;
  tc.ffn_dim = 8;
  tc.max_len = 16;
  seq::TransformerEncoder enc(tc, rng);
  MutwinConfig mc;
  mc.half_width = 2;
  mc.channels = 4;
  mc.lstm_hidden = 3;
  mc.output_dim = 5;
  MutationBranch branch(mc, 6, 6, rng);
  seq::TokenizedSequence s{{0, 3, 2, 4, 1, 1}, 1, false};
  auto h_seq = testing::random_leaf({6}, rng);
  ParamList params;
  branch.collect(params, "mutwin");
  auto leaves = tensors_of(params);
  leaves.push_back(enc.embedding);
  leaves.push_back(h_seq);
  auto loss = [&] { return testing::weighted_sum(branch.combine(branch.local(enc, s, 5), h_seq), 6); };
  auto r = testing::check_gradients(loss, leaves);
  EXPECT_LT(r.max_rel_err, 1e-4) << r.worst;
}

TEST(Branch, NoCenterGivesZeroLocal) {
  Rng rng(13);
  seq::TransformerEncoder enc(seq::TransformerConfig{}, rng);
  MutwinConfig mc;
  mc.midpoint_fallback = false;
  MutationBranch branch(mc, 64, 64, rng);
  auto h = branch.local(enc, {{1, 2, 3}, std::nullopt, false}, 20);
  ASSERT_EQ(h.shape(), (Shape{64}));
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
  mc.midpoint_fallback = true;
  branch.config = mc;
  double norm = 0;
  for (double v : branch.local(enc, {{1, 2, 3}, std::nullopt, false}, 20).values()) norm += std::abs(v);
  EXPECT_GT(norm, 0.0);
}

}  // namespace
}  // namespace bindfuse::mutwin

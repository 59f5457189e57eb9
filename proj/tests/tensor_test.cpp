// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "bindfuse/adam.hpp"
#include "bindfuse/tensor.hpp"
#include "support/gradcheck.hpp"

namespace bindfuse {
namespace {

using testing::check_gradients;
using testing::random_leaf;
using testing::weighted_sum;

void expect_values(const Tensor& t, std::vector<double> expected, double tol = 0.0) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t[i], expected[i], tol) << "at " << i;
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  auto x = Tensor::matrix({{1.5, -2.0, 3.0}, {0.25, 4.0, -1.0}});
  auto y = matmul(Tensor::identity(2), x);
  expect_values(y, {1.5, -2.0, 3.0, 0.25, 4.0, -1.0});
}

TEST(Matmul, HandMultiplication) {
  auto y = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{1}, {1}}));
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  expect_values(y, {3, 7});
}

TEST(Matmul, RejectsInnerMismatchWithDimensions) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] x [2x3]"), std::string::npos) << e.what();
  }
}

TEST(Matmul, GradientOfSumMatchesFiniteDifferences) {
  Rng rng(7);
  auto a = random_leaf({3, 4}, rng);
  auto b = random_leaf({4, 2}, rng);
  auto r = check_gradients([&] { return sum_all(matmul(a, b)); }, {a, b});
  EXPECT_LT(r.max_rel_err, 1e-6) << r.worst;
}

TEST(Elementwise, AddZerosIsIdentity) {
  auto x = Tensor::vector({1, -2, 3});
  expect_values(add(x, Tensor::zeros({3})), {1, -2, 3});
}

TEST(Elementwise, HandProduct) { expect_values(mul(Tensor::vector({2, 3}), Tensor::vector({4, 5})), {8, 15}); }

TEST(Elementwise, RejectsShapeMismatchNoBroadcast) {
  EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({3})), ShapeError);
  EXPECT_THROW(mul(Tensor::zeros({1, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Relu, ClampsAndIsIdempotent) {
  auto x = Tensor::vector({-1, 0, 2});
  auto y = relu(x);
  expect_values(y, {0, 0, 2});
  expect_values(relu(y), {0, 0, 2});
}

TEST(Relu, DerivativeIsStepWithZeroAtOrigin) {
  auto x = Tensor::vector({-0.5, 0.5, 0.0}, true);
  backward(sum_all(relu(x)));
  expect_values(Tensor::vector({x.grad()[0], x.grad()[1], x.grad()[2]}), {0, 1, 0});
}

TEST(Softmax, UniformRowAndClosedForm) {
  auto y = softmax_rows(Tensor::matrix({{2, 2, 2, 2}, {0, std::log(3.0), 0, 0}}));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(y.at(0, j), 0.25, 1e-15);
  auto z = softmax_rows(Tensor::matrix({{0, std::log(3.0)}}));
  EXPECT_NEAR(z[0], 0.25, 1e-15);
  EXPECT_NEAR(z[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvarianceAndStabilityAtLargeMagnitude) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(5 * 7);
    for (double& x : v) x = rng.uniform(-1e3, 1e3);
    auto x = Tensor::from({5, 7}, v);
    auto shifted = x.detach();
    for (double& s : shifted.mutable_values()) s += 123.456;
    auto a = softmax_rows(x), b = softmax_rows(shifted);
    for (std::size_t i = 0; i < 5; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        total += a.at(i, j);
        EXPECT_NEAR(a.at(i, j), b.at(i, j), 1e-12);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Reduce, MeanOfIdenticalRowsAndSumOfOnes) {
  auto rows = Tensor::matrix({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  expect_values(reduce(rows, 0, Reduce::mean), {1, 2, 3}, 1e-15);
  auto s = reduce(Tensor::filled({3, 4}, 1.0), 0, Reduce::sum);
  EXPECT_EQ(s.shape(), Shape{4});
  expect_values(s, {3, 3, 3, 3});
}

TEST(Reduce, InvalidAxisRejected) { EXPECT_THROW(reduce(Tensor::zeros({2, 2}), 2, Reduce::sum), ShapeError); }

TEST(ConcatVec, EmptyAndHandCases) {
  auto x = Tensor::vector({4, 5});
  expect_values(concat_vec(Tensor::zeros({0}), x), {4, 5});
  expect_values(concat_vec(Tensor::vector({1, 2}), Tensor::vector({3})), {1, 2, 3});
  EXPECT_THROW(concat_vec(Tensor::zeros({1, 2}), x), ShapeError);
}

TEST(ConcatVec, GradientSplitsAtBoundary) {
  auto a = Tensor::vector({1, 2}, true);
  auto b = Tensor::vector({3}, true);
  backward(sum_all(concat_vec(a, b)));
  expect_values(Tensor::vector({a.grad()[0], a.grad()[1], b.grad()[0]}), {1, 1, 1});
}

TEST(Mse, ZeroAndHandValue) {
  EXPECT_EQ(mse(Tensor::vector({1, 2}), Tensor::vector({1, 2})).item(), 0.0);
  EXPECT_NEAR(mse(Tensor::vector({1, 2, 4}), Tensor::vector({1, 2, 3})).item(), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(mse(Tensor::zeros({0}), Tensor::zeros({0})), ShapeError);
}

TEST(Backward, SumAndSquare) {
  auto x = Tensor::vector({1, 2}, true);
  backward(sum_all(x));
  expect_values(Tensor::vector({x.grad()[0], x.grad()[1]}), {1, 1});
  x.zero_grad();
  backward(sum_all(mul(x, x)));
  expect_values(Tensor::vector({x.grad()[0], x.grad()[1]}), {2, 4});
}

TEST(Backward, MultiUseNodeAccumulates) {
  auto x = Tensor::scalar(3.0, true);
  backward(add(x, x));
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(Backward, SharedIntermediateVisitedOnce) {
  auto x = Tensor::vector({1.5, -0.5}, true);
  auto y = mul(x, x);  // consumed twice below
  backward(sum_all(add(y, y)));
  expect_values(Tensor::vector({x.grad()[0], x.grad()[1]}), {6.0, -2.0}, 1e-15);
}

TEST(Backward, SecondCallAccumulatesIntoLeaves) {
  auto x = Tensor::vector({1, 2}, true);
  auto loss = sum_all(mul(x, x));
  backward(loss);
  backward(loss);
  expect_values(Tensor::vector({x.grad()[0], x.grad()[1]}), {4, 8});
}

TEST(Backward, UnreachableLeafStaysZero) {
  auto used = Tensor::vector({1, 2}, true);
  auto unused = Tensor::vector({3, 4}, true);
  backward(sum_all(used));
  for (double g : unused.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, RejectsNonScalarRoot) { EXPECT_THROW(backward(Tensor::zeros({2}, true)), ShapeError); }

TEST(Tensor, SizeInvariant) {
  auto t = Tensor::zeros({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.grad().size(), 24u);
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
}

// Every differentiable op against central differences on ten seeds.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, AllOpsMatchFiniteDifferences) {
  const auto seed = static_cast<std::uint64_t>(GetParam());
  Rng rng(seed);
  auto a = random_leaf({3, 4}, rng);
  auto b = random_leaf({4, 5}, rng);
  auto c = random_leaf({3, 4}, rng);
  auto v = random_leaf({4}, rng);
  auto w = random_leaf({3}, rng);
  auto s = random_leaf({}, rng);
  auto k = random_leaf({2, 3, 3}, rng);
  auto kb = random_leaf({2}, rng);
  auto gain = random_leaf({4}, rng, 0.5, 1.5);
  auto t = random_leaf({3}, rng);
  // Keep relu inputs away from the kink.
  auto r = random_leaf({3, 4}, rng);
  for (double& x : r.mutable_values()) x += x > 0 ? 0.1 : -0.1;

  struct Case {
    const char* name;
    std::function<Tensor()> fn;
    std::vector<Tensor> leaves;
  };
  const std::vector<std::vector<std::size_t>> adj{{1, 2}, {0}, {0}};
  std::vector<Case> cases{
      {"matmul", [&] { return weighted_sum(matmul(a, b), seed); }, {a, b}},
      {"add", [&] { return weighted_sum(add(a, c), seed); }, {a, c}},
      {"mul", [&] { return weighted_sum(mul(a, c), seed); }, {a, c}},
      {"relu", [&] { return weighted_sum(relu(r), seed); }, {r}},
      {"sigmoid", [&] { return weighted_sum(sigmoid(a), seed); }, {a}},
      {"tanh", [&] { return weighted_sum(tanh(a), seed); }, {a}},
      {"softmax", [&] { return weighted_sum(softmax_rows(a), seed); }, {a}},
      {"reduce_mean", [&] { return weighted_sum(reduce(a, 0, Reduce::mean), seed); }, {a}},
      {"reduce_sum", [&] { return weighted_sum(reduce(a, 1, Reduce::sum), seed); }, {a}},
      {"concat", [&] { return weighted_sum(concat_vec(v, w), seed); }, {v, w}},
      {"mse", [&] { return mse(w, t); }, {w, t}},
      {"scale_by", [&] { return weighted_sum(scale_by(s, a), seed); }, {s, a}},
      {"add_row", [&] { return weighted_sum(add_row(a, v), seed); }, {a, v}},
      {"transpose", [&] { return weighted_sum(transpose(a), seed); }, {a}},
      {"slice_concat_cols",
       [&] { return weighted_sum(concat_cols({slice_cols(a, 1, 2), c}), seed); }, {a, c}},
      {"gather_rows", [&] { return weighted_sum(gather_rows(a, {2, 0, 2}), seed); }, {a}},
      {"layer_norm", [&] { return weighted_sum(layer_norm(a, gain, v, 1e-5), seed); }, {a, gain, v}},
      {"cross_entropy", [&] { return cross_entropy_rows(a, {0, 3, 1}); }, {a}},
      {"conv1d", [&] { return weighted_sum(conv1d_same(transpose(a), k, kb), seed); }, {a, k, kb}},
      {"neighbor_sum", [&] { return weighted_sum(neighbor_sum(a, adj), seed); }, {a}},
  };
  for (auto& cs : cases) {
    auto res = check_gradients(cs.fn, cs.leaves);
    EXPECT_LT(res.max_rel_err, 1e-6) << cs.name << ": " << res.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(TenSeeds, OpGradient, ::testing::Range(1, 11));

TEST(Determinism, IdenticalInputsGiveBitwiseIdenticalOutputs) {
  Rng r1(11), r2(11);
  auto a1 = random_leaf({6, 6}, r1), a2 = random_leaf({6, 6}, r2);
  auto y1 = softmax_rows(matmul(a1, transpose(a1)));
  auto y2 = softmax_rows(matmul(a2, transpose(a2)));
  EXPECT_EQ(std::memcmp(y1.values().data(), y2.values().data(), y1.size() * sizeof(double)), 0);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto w = Tensor::vector({1.0, -2.0}, true);
  std::vector<Tensor> params{w};
  AdamState state;
  adam_step(params, state);
  expect_values(w, {1.0, -2.0});
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, StepMovesDownhillAndZeroesGrad) {
  auto w = Tensor::vector({1.0}, true);
  std::vector<Tensor> params{w};
  AdamState state;
  backward(sum_all(mul(w, w)));
  adam_step(params, state);
  EXPECT_LT(w[0], 1.0);
  EXPECT_EQ(w.grad()[0], 0.0);
}

TEST(Adam, ConvergesOnShiftedQuadratic) {
  auto w = Tensor::vector({0.0}, true);
  std::vector<Tensor> params{w};
  AdamState state(AdamConfig{.lr = 0.1});
  auto target = Tensor::vector({3.0});
  for (int i = 0; i < 200; ++i) {
    auto d = sub(w, target);
    backward(sum_all(mul(d, d)));
    adam_step(params, state);
  }
  EXPECT_LT(std::abs(w[0] - 3.0), 0.1);
  EXPECT_EQ(state.step_count, 200u);
}

TEST(Adam, RefusesNonFiniteGradient) {
  auto w = Tensor::vector({1.0, 2.0}, true);
  w.mutable_grad()[1] = std::nan("");
  std::vector<Tensor> params{w};
  AdamState state;
  EXPECT_THROW(adam_step(params, state), NumericalError);
  expect_values(w, {1.0, 2.0});
  EXPECT_EQ(state.step_count, 0u);
}

TEST(NoGrad, GuardSkipsGraphAndRestores) {
  auto a = Tensor::vector({1.0, 2.0}, true);
  {
    NoGradGuard guard;
    auto y = scale(a, 3.0);
    EXPECT_FALSE(y.requires_grad());
    expect_values(y, {3.0, 6.0});
  }
  EXPECT_TRUE(scale(a, 3.0).requires_grad());
}

}  // namespace
}  // namespace bindfuse

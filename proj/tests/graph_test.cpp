// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bindfuse/data/synthetic.hpp"
#include "bindfuse/graph/geometry.hpp"
#include "bindfuse/graph/gin.hpp"
#include "bindfuse/graph/molecular_graph.hpp"
#include "support/gradcheck.hpp"

namespace bindfuse::graph {
namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Tensor& t) {
  Rows out(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out[i][j] = t.at(i, j);
  return out;
}

// Per-node reference: explicit loops, no batching, no autodiff.
Rows naive_gin_layer(const GinLayer& layer, const Rows& h, const Adjacency& adj) {
  const double eps = layer.epsilon.item();
  const auto& w1 = layer.hidden.weight;
  const auto& b1 = layer.hidden.bias;
  const auto& w2 = layer.output.weight;
  const auto& b2 = layer.output.bias;
  Rows out;
  for (std::size_t v = 0; v < h.size(); ++v) {
    std::vector<double> agg(h[v].size());
    for (std::size_t f = 0; f < agg.size(); ++f) {
      agg[f] = (1.0 + eps) * h[v][f];
      for (std::size_t u : adj[v]) agg[f] += h[u][f];
    }
    std::vector<double> hid(w1.cols());
    for (std::size_t j = 0; j < hid.size(); ++j) {
      double s = b1[j];
      for (std::size_t f = 0; f < agg.size(); ++f) s += agg[f] * w1.at(f, j);
      hid[j] = std::max(s, 0.0);
    }
    std::vector<double> o(w2.cols());
    for (std::size_t k = 0; k < o.size(); ++k) {
      double s = b2[k];
      for (std::size_t j = 0; j < hid.size(); ++j) s += hid[j] * w2.at(j, k);
      o[k] = s;
    }
    out.push_back(o);
  }
  return out;
}

std::vector<double> naive_encode(const GinEncoder& enc, const MolecularGraph& g) {
  Rows h = to_rows(g.node_features);
  for (const auto& layer : enc.layers) h = naive_gin_layer(layer, h, g.adjacency);
  std::vector<double> pooled(h[0].size(), 0.0);
  for (const auto& r : h)
    for (std::size_t j = 0; j < r.size(); ++j) pooled[j] += r[j];
  if (enc.readout == Readout::mean)
    for (double& x : pooled) x /= static_cast<double>(h.size());
  return pooled;
}

double max_abs_diff(const Tensor& t, const std::vector<double>& ref) {
  double m = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) m = std::max(m, std::abs(t[i] - ref[i]));
  return m;
}

MolecularGraph random_graph(std::uint64_t seed) {
  data::GeneratorParams p;
  p.extra_features = 2;
  return featurize(data::generate_synthetic(1, seed, p)[0].complex, 2);
}

const auto identity_mlp = [](const Tensor& x) { return x; };

TEST(GinUpdate, IsolatedNodeKeepsRowWithZeroEpsilon) {
  auto h = Tensor::matrix({{1.5, -2.0}});
  auto out = gin_update(Tensor::scalar(0.0), identity_mlp, h, {{}});
  EXPECT_EQ(out.at(0, 0), 1.5);
  EXPECT_EQ(out.at(0, 1), -2.0);
}

TEST(GinUpdate, EpsilonMinusOneCancelsSelfTerm) {
  auto out = gin_update(Tensor::scalar(-1.0), identity_mlp, Tensor::matrix({{1.5, -2.0}}), {{}});
  EXPECT_EQ(out.at(0, 0), 0.0);
  EXPECT_EQ(out.at(0, 1), 0.0);
}

TEST(GinUpdate, PathGraphHandCase) {
  const Adjacency path{{1}, {0, 2}, {1}};
  auto h = Tensor::matrix({{1}, {2}, {3}});
  auto out = gin_update(Tensor::scalar(0.0), identity_mlp, h, path);
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 6.0);
  EXPECT_EQ(out[2], 5.0);

  // Same case through a real layer whose MLP is the identity on non-negative inputs.
  Rng rng(1);
  GinLayer layer(1, 1, rng);
  layer.hidden.weight.mutable_values()[0] = 1.0;
  layer.output.weight.mutable_values()[0] = 1.0;
  auto via_layer = gin_layer_forward(layer, h, path);
  EXPECT_EQ(via_layer[0], 3.0);
  EXPECT_EQ(via_layer[1], 6.0);
  EXPECT_EQ(via_layer[2], 5.0);
}

TEST(GinUpdate, RejectsShapeMismatch) {
  Rng rng(1);
  GinLayer layer(3, 4, rng);
  EXPECT_THROW(gin_layer_forward(layer, Tensor::zeros({2, 3}), {{}, {}, {}}), ShapeError);
  EXPECT_THROW(gin_layer_forward(layer, Tensor::zeros({2, 5}), {{}, {}}), ShapeError);
}

TEST(GinLayerOracle, MatchesNaiveReferenceOnRandomGraphs) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto g = random_graph(100 + s);
    Rng rng(s);
    GinLayer layer(g.node_features.cols(), 16, rng);
    layer.epsilon.mutable_values()[0] = rng.uniform(-0.5, 0.5);
    auto fast = gin_layer_forward(layer, g.node_features, g.adjacency);
    auto ref = naive_gin_layer(layer, to_rows(g.node_features), g.adjacency);
    for (std::size_t v = 0; v < ref.size(); ++v)
      for (std::size_t j = 0; j < ref[v].size(); ++j) ASSERT_NEAR(fast.at(v, j), ref[v][j], 1e-10);
  }
}

TEST(EncodeGraph, MatchesNaiveReferenceOnRandomGraphs) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto g = random_graph(500 + s);
    Rng rng(s);
    GinEncoder enc(g.node_features.cols(), 64, 3, s % 2 ? Readout::mean : Readout::sum, rng);
    for (auto& l : enc.layers) l.epsilon.mutable_values()[0] = rng.uniform(-0.5, 0.5);
    EXPECT_LT(max_abs_diff(encode_graph(enc, g), naive_encode(enc, g)), 1e-10);
  }
}

TEST(EncodeGraph, SingleNodeReadoutIsNodeEmbedding) {
  data::ComplexRecord rec;
  rec.id = "one";
  rec.atoms.push_back({"O", {}, {0, 0, 0}});
  auto g = featurize(rec, 0);
  Rng rng(2);
  for (auto mode : {Readout::sum, Readout::mean}) {
    GinEncoder enc(g.node_features.cols(), 8, 3, mode, rng);
    auto e = enc.encode(g);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(e.pooled[j], e.nodes.at(0, j));
  }
}

TEST(EncodeGraph, EmptyGraphRejected) {
  Rng rng(2);
  GinEncoder enc(11, 8, 2, Readout::sum, rng);
  MolecularGraph empty;
  empty.node_features = Tensor::zeros({0, 11});
  EXPECT_THROW(encode_graph(enc, empty), ValidationError);
}

TEST(EncodeGraph, PermutationInvariance) {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_graph(900 + static_cast<std::uint64_t>(trial));
    GinEncoder enc(g.node_features.cols(), 64, 3, trial % 2 ? Readout::mean : Readout::sum, rng);
    std::vector<std::size_t> perm(g.num_nodes());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    auto a = encode_graph(enc, g);
    auto b = encode_graph(enc, permute_nodes(g, perm));
    for (std::size_t j = 0; j < a.size(); ++j) ASSERT_LT(std::abs(a[j] - b[j]), 1e-9);
  }
}

TEST(EncodeGraph, ZeroFeaturesGiveIdenticalNodesAfterFirstLayer) {
  auto g = random_graph(7);
  g.node_features = Tensor::zeros(g.node_features.shape());
  Rng rng(9);
  GinLayer layer(g.node_features.cols(), 16, rng);
  auto h = gin_layer_forward(layer, g.node_features, g.adjacency);
  for (std::size_t v = 1; v < h.rows(); ++v)
    for (std::size_t j = 0; j < h.cols(); ++j) EXPECT_EQ(h.at(v, j), h.at(0, j));
}

TEST(EncodeGraph, EpsilonReceivesGradient) {
  auto g = random_graph(3);
  Rng rng(3);
  GinEncoder enc(g.node_features.cols(), 16, 3, Readout::sum, rng);
  backward(testing::weighted_sum(encode_graph(enc, g), 1));
  for (const auto& l : enc.layers) EXPECT_NE(l.epsilon.grad()[0], 0.0);
}

TEST(Featurize, OneHotAndUnknownElementWarning) {
  data::ComplexRecord rec;
  rec.id = "x";
  rec.atoms.push_back({"Cl", {0.5}, {0, 0, 0}});
  rec.atoms.push_back({"Xe", {-0.5}, {1, 0, 0}});
  rec.bonds.push_back({0, 1, data::BondType::single});
  std::vector<std::string> warnings;
  auto prev = set_warning_handler([&](std::string_view m) { warnings.emplace_back(m); });
  auto g = featurize(rec, 1);
  set_warning_handler(prev);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("Xe"), std::string::npos);
  EXPECT_EQ(g.node_features.cols(), 12u);
  EXPECT_EQ(g.node_features.at(0, 7), 1.0);   // Cl
  EXPECT_EQ(g.node_features.at(1, 10), 1.0);  // other
  EXPECT_EQ(g.node_features.at(1, 11), -0.5);
  EXPECT_EQ(g.adjacency, (Adjacency{{1}, {0}}));
  EXPECT_THROW(featurize(rec, 2), ValidationError);
}

TEST(PairwiseDistance, PythagoreanTripleAndZeroDiagonal) {
  auto d = pairwise_distance(Tensor::matrix({{0, 0, 0}, {3, 4, 0}}));
  EXPECT_EQ(d.at(0, 1), 5.0);
  EXPECT_EQ(d.at(1, 0), 5.0);
  EXPECT_EQ(d.at(0, 0), 0.0);
  EXPECT_EQ(d.at(1, 1), 0.0);
}

TEST(PairwiseDistance, SymmetryAndTriangleInequality) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t V = 2 + rng.uniform_index(15);
    auto coords = testing::random_leaf({V, 3}, rng, -10.0, 10.0);
    auto d = pairwise_distance(coords);
    for (std::size_t i = 0; i < V; ++i) {
      EXPECT_EQ(d.at(i, i), 0.0);
      for (std::size_t j = 0; j < V; ++j) {
        EXPECT_EQ(d.at(i, j), d.at(j, i));
        for (std::size_t k = 0; k < V; ++k) EXPECT_LE(d.at(i, k), d.at(i, j) + d.at(j, k) + 1e-9);
      }
    }
  }
}

TEST(GeometryRegularizer, SingleNodeIsExactlyZero) {
  Rng rng(1);
  GinEncoder enc(11, 8, 1, Readout::sum, rng);
  auto r = geometry_regularizer(enc, Tensor::zeros({1, 8}), Tensor::zeros({1, 3}), 32, 0);
  EXPECT_EQ(r.item(), 0.0);
}

TEST(GeometryRegularizer, PerfectHeadGivesZero) {
  // One-hot node embeddings let the test double read off (i, j) and answer d_ij.
  const std::size_t V = 6;
  Rng rng(4);
  auto coords = testing::random_leaf({V, 3}, rng, -3.0, 3.0);
  auto dist = pairwise_distance(coords);
  auto oracle_head = [&](const Tensor& x) {
    std::vector<double> out;
    for (std::size_t p = 0; p < x.rows(); ++p) {
      std::size_t i = 0, j = 0;
      for (std::size_t k = 0; k < V; ++k) {
        if (x.at(p, k) == 1.0) i = k;
        if (x.at(p, V + k) == 1.0) j = k;
      }
      out.push_back(dist.at(i, j));
    }
    return Tensor::from({x.rows(), 1}, out);
  };
  auto r = geometry_regularizer(oracle_head, Tensor::identity(V), coords, 4, 11);
  EXPECT_EQ(r.item(), 0.0);
}

TEST(GeometryRegularizer, PairSamplingIsSeededAndBounded) {
  auto a = regularizer_pairs(16, 32, 5), b = regularizer_pairs(16, 32, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 32u);
  for (auto [i, j] : a) EXPECT_LT(i, j);
  EXPECT_EQ(regularizer_pairs(5, 32, 5).size(), 10u);
}

TEST(GeometryRegularizer, GradientReachesHeadAndEmbeddings) {
  Rng rng(12);
  auto g = random_graph(12);
  GinEncoder enc(g.node_features.cols(), 8, 1, Readout::sum, rng);
  auto emb = testing::random_leaf({g.num_nodes(), 8}, rng);
  auto loss = [&] { return geometry_regularizer(enc, emb, g.coords, 32, 3); };
  auto res = testing::check_gradients(loss, {emb, enc.distance_head.weight, enc.distance_head.bias});
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst;
  backward(loss());
  EXPECT_GT(std::abs(emb.grad()[0]) + std::abs(emb.grad()[1]), 0.0);
  EXPECT_NE(enc.distance_head.bias.grad()[0], 0.0);
}

TEST(GinEncoderGradient, FiniteDifferencesThroughAllLayers) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    Rng rng(s);
    auto g = random_graph(s);
    GinEncoder enc(g.node_features.cols(), 8, 3, Readout::sum, rng);
    for (auto& l : enc.layers) l.epsilon.mutable_values()[0] = rng.uniform(-0.3, 0.3);
    ParamList params;
    enc.collect(params, "g");
    auto res = testing::check_gradients([&] { return testing::weighted_sum(encode_graph(enc, g), s); },
                                        tensors_of(params));
    EXPECT_LT(res.max_rel_err, 1e-6) << res.worst;
  }
}

}  // namespace
}  // namespace bindfuse::graph

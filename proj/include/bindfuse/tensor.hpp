// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

// Dense float64 tensors with tape-free reverse-mode differentiation.
//
// Every op result keeps shared references to its inputs plus a closure that
// pushes the output gradient back into them. backward() orders the reachable
// graph topologically and runs each closure once, so a node consumed twice
// receives the sum of both contributions.
//
// There is no implicit broadcasting: bias-style additions go through the
// explicit add_row() op.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bindfuse/error.hpp"

namespace bindfuse {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  bool is_leaf() const { return !backward; }
  Node& in(std::size_t i) { return *inputs[i]; }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (shape_size(shape) != values.size()) {
      throw ShapeError("tensor of shape " + shape_str(shape) + " needs " +
                       std::to_string(shape_size(shape)) + " values, got " +
                       std::to_string(values.size()));
    }
    auto node = std::make_shared<detail::Node>();
    node->grad.assign(values.size(), 0.0);
    node->values = std::move(values);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = shape_size(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor filled(Shape shape, double value, bool requires_grad = false) {
    const auto n = shape_size(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return from({}, {value}, requires_grad);
  }

  static Tensor vector(std::vector<double> values, bool requires_grad = false) {
    const auto n = values.size();
    return from({n}, std::move(values), requires_grad);
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false) {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(m * n);
    for (const auto& r : rows) {
      if (r.size() != n) throw ShapeError("ragged matrix literal");
      values.insert(values.end(), r.begin(), r.end());
    }
    return from({m, n}, std::move(values), requires_grad);
  }

  static Tensor identity(std::size_t n, bool requires_grad = false) {
    auto t = zeros({n, n}, requires_grad);
    for (std::size_t i = 0; i < n; ++i) t.node_->values[i * n + i] = 1.0;
    return t;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->values.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return node_->shape.at(1); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->values; }
  std::span<const double> grad() const { return node_->grad; }

  /// Direct write access, intended for parameter updates, loading and tests.
  /// Mutating the values of a tensor that feeds a live graph invalidates it.
  std::span<double> mutable_values() { return node_->values; }
  std::span<double> mutable_grad() { return node_->grad; }

  double item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->values[0];
  }
  double operator[](std::size_t i) const { return node_->values[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  /// Copy of the values with no graph history.
  Tensor detach() const { return from(shape(), node_->values, false); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {

using BackwardFn = std::function<void(Node&)>;

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

inline Tensor make_result(Shape shape, std::vector<double> values,
                          std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->grad.assign(values.size(), 0.0);
  node->values = std::move(values);
  node->shape = std::move(shape);
  bool any = false;
  for (const Tensor* t : inputs) any = any || t->requires_grad();
  if (any && grad_mode()) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const Tensor* t : inputs) node->inputs.push_back(t->node());
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

inline Tensor make_result(Shape shape, std::vector<double> values,
                          const std::vector<Tensor>& inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->grad.assign(values.size(), 0.0);
  node->values = std::move(values);
  node->shape = std::move(shape);
  bool any = std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (any && grad_mode()) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_str(t.shape()));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

// C[m x n] += A[m x k] * B[k x n], row-major.
inline void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
                    std::size_t k, std::size_t n) {
  std::size_t i = 0;
  // Four output rows share each pass over a row of B.
  for (; i + 4 <= m; i += 4) {
    double* __restrict c0 = c + i * n;
    double* __restrict c1 = c0 + n;
    double* __restrict c2 = c1 + n;
    double* __restrict c3 = c2 + n;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = brow[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* __restrict crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n].
inline void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
                    std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * k;
    const double* __restrict b0 = b + i * n;
    const double* __restrict b1 = b0 + n;
    const double* __restrict b2 = b1 + n;
    const double* __restrict b3 = b2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      double* __restrict crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
    }
  }
  for (; i < m; ++i) {
    const double* arow = a + i * k;
    const double* __restrict brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* __restrict crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline std::vector<double> transposed(const double* a, std::size_t m, std::size_t n) {
  std::vector<double> t(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = a[i * n + j];
  return t;
}

// C[m x k] += A[m x n] * B[k x n]^T.
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                    std::size_t k) {
  const auto bt = transposed(b, k, n);
  gemm_nn(a, bt.data(), c, m, n, k);
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make_result(a.shape(), std::move(out), {&a}, [deriv](Node& self) {
    Node& x = self.in(0);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      x.grad[i] += self.grad[i] * deriv(x.values[i], self.values[i]);
  });
}

}  // namespace detail

/// Ops created while a guard is alive record no backward graph.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// Matrix product of a [m x k] and b [k x n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner extents disagree, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()) + " (" + std::to_string(k) +
                     " != " + std::to_string(b.rows()) + ")");
  }
  std::vector<double> out(m * n, 0.0);
  detail::gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  return detail::make_result({m, n}, std::move(out), {&a, &b}, [m, k, n](detail::Node& self) {
    detail::Node& A = self.in(0);
    detail::Node& B = self.in(1);
    if (A.requires_grad) detail::gemm_nt(self.grad.data(), B.values.data(), A.grad.data(), m, n, k);
    if (B.requires_grad) detail::gemm_tn(A.values.data(), self.grad.data(), B.grad.data(), m, k, n);
  });
}

inline Tensor transpose(const Tensor& a) {
  detail::require_rank(a, 2, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  auto out = detail::transposed(a.values().data(), m, n);
  return detail::make_result({n, m}, std::move(out), {&a}, [m, n](detail::Node& self) {
    detail::Node& A = self.in(0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += self.grad[j * m + i];
  });
}

/// Same values, new extents. Element count must match.
inline Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return detail::make_result(std::move(shape), std::move(out), {&a}, [](detail::Node& self) {
    detail::Node& A = self.in(0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Pointwise
// ---------------------------------------------------------------------------

enum class Elementwise { add, sub, mul };

inline Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise kind) {
  detail::require_same_shape(a, b, "elementwise");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(a.size());
  switch (kind) {
    case Elementwise::add:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
      break;
    case Elementwise::sub:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
      break;
    case Elementwise::mul:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
      break;
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [kind](detail::Node& self) {
    detail::Node& A = self.in(0);
    detail::Node& B = self.in(1);
    const std::size_t n = self.grad.size();
    switch (kind) {
      case Elementwise::add:
        if (A.requires_grad) for (std::size_t i = 0; i < n; ++i) A.grad[i] += self.grad[i];
        if (B.requires_grad) for (std::size_t i = 0; i < n; ++i) B.grad[i] += self.grad[i];
        break;
      case Elementwise::sub:
        if (A.requires_grad) for (std::size_t i = 0; i < n; ++i) A.grad[i] += self.grad[i];
        if (B.requires_grad) for (std::size_t i = 0; i < n; ++i) B.grad[i] -= self.grad[i];
        break;
      case Elementwise::mul:
        if (A.requires_grad)
          for (std::size_t i = 0; i < n; ++i) A.grad[i] += self.grad[i] * B.values[i];
        if (B.requires_grad)
          for (std::size_t i = 0; i < n; ++i) B.grad[i] += self.grad[i] * A.values[i];
        break;
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::add); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::sub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, Elementwise::mul); }

inline Tensor scale(const Tensor& a, double c) {
  return detail::unary(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  return detail::unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

/// s * a where s is a one-element tensor (a learnable scalar).
inline Tensor scale_by(const Tensor& s, const Tensor& a) {
  if (s.size() != 1) throw ShapeError("scale_by: factor must hold one value, got " + shape_str(s.shape()));
  const double c = s.item();
  std::vector<double> out(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
  return detail::make_result(a.shape(), std::move(out), {&s, &a}, [](detail::Node& self) {
    detail::Node& S = self.in(0);
    detail::Node& A = self.in(1);
    const double c = S.values[0];
    double ds = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ds += self.grad[i] * A.values[i];
      if (A.requires_grad) A.grad[i] += self.grad[i] * c;
    }
    if (S.requires_grad) S.grad[0] += ds;
  });
}

/// ReLU with derivative 0 at exactly 0.
inline Tensor relu(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

/// Row-wise bias add: out[i, j] = a[i, j] + b[j].
inline Tensor add_row(const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "add_row");
  detail::require_rank(b, 1, "add_row");
  const std::size_t m = a.rows(), n = a.cols();
  if (b.dim(0) != n) {
    throw ShapeError("add_row: row width " + std::to_string(n) + " vs bias " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  return detail::make_result({m, n}, std::move(out), {&a, &b}, [m, n](detail::Node& self) {
    detail::Node& A = self.in(0);
    detail::Node& B = self.in(1);
    if (A.requires_grad)
      for (std::size_t i = 0; i < m * n; ++i) A.grad[i] += self.grad[i];
    if (B.requires_grad)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) B.grad[j] += self.grad[i * n + j];
  });
}

// ---------------------------------------------------------------------------
// Normalization and reductions
// ---------------------------------------------------------------------------

/// Row-wise softmax with max subtraction.
inline Tensor softmax_rows(const Tensor& a) {
  detail::require_rank(a, 2, "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto av = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = av.data() + i * n;
    double* o = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  return detail::make_result({m, n}, std::move(out), {&a}, [m, n](detail::Node& self) {
    detail::Node& A = self.in(0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.values.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

enum class Reduce { sum, mean };

/// Collapses one axis. Reducing a vector yields a scalar of shape [].
inline Tensor reduce(const Tensor& a, std::size_t axis, Reduce kind) {
  if (axis >= a.rank()) {
    throw ShapeError("reduce: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(a.shape()));
  }
  const auto& s = a.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  const double w = kind == Reduce::mean ? 1.0 / static_cast<double>(len) : 1.0;
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  std::vector<double> out(outer * inner, 0.0);
  const auto av = a.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += av[(o * len + l) * inner + i];
  if (kind == Reduce::mean)
    for (double& v : out) v *= w;
  return detail::make_result(std::move(out_shape), std::move(out), {&a},
                             [outer, len, inner, w](detail::Node& self) {
                               detail::Node& A = self.in(0);
                               for (std::size_t o = 0; o < outer; ++o)
                                 for (std::size_t l = 0; l < len; ++l)
                                   for (std::size_t i = 0; i < inner; ++i)
                                     A.grad[(o * len + l) * inner + i] +=
                                         w * self.grad[o * inner + i];
                             });
}

inline Tensor sum_all(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return detail::make_result({}, {total}, {&a}, [](detail::Node& self) {
    detail::Node& A = self.in(0);
    for (double& g : A.grad) g += self.grad[0];
  });
}

/// Layer normalization over the last axis of a [m x n] matrix.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  detail::require_rank(x, 2, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.shape() != Shape{n} || bias.shape() != Shape{n}) {
    throw ShapeError("layer_norm: gain/bias must be [" + std::to_string(n) + "]");
  }
  std::vector<double> out(m * n), xhat(m * n), inv_std(m);
  const auto xv = x.values(), gv = gain.values(), bv = bias.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mean) * inv_std[i];
      out[i * n + j] = gv[j] * xhat[i * n + j] + bv[j];
    }
  }
  return detail::make_result(
      {m, n}, std::move(out), {&x, &gain, &bias},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
        detail::Node& X = self.in(0);
        detail::Node& G = self.in(1);
        detail::Node& B = self.in(2);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
          const double* dy = self.grad.data() + i * n;
          const double* xh = xhat.data() + i * n;
          if (G.requires_grad)
            for (std::size_t j = 0; j < n; ++j) G.grad[j] += dy[j] * xh[j];
          if (B.requires_grad)
            for (std::size_t j = 0; j < n; ++j) B.grad[j] += dy[j];
          if (X.requires_grad) {
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dxh = dy[j] * G.values[j];
              mean_dxh += dxh;
              mean_dxh_xh += dxh * xh[j];
            }
            mean_dxh *= inv_n;
            mean_dxh_xh *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const double dxh = dy[j] * G.values[j];
              X.grad[i * n + j] += inv_std[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Structural ops
// ---------------------------------------------------------------------------

/// [a || b] for rank-1 operands; either may be empty.
inline Tensor concat_vec(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw ShapeError("concat_vec: both operands must be rank 1, got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  const std::size_t p = a.size();
  std::vector<double> out(a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  const std::size_t total = out.size();
  return detail::make_result({total}, std::move(out), {&a, &b}, [p](detail::Node& self) {
    detail::Node& A = self.in(0);
    detail::Node& B = self.in(1);
    if (A.requires_grad)
      for (std::size_t i = 0; i < p; ++i) A.grad[i] += self.grad[i];
    if (B.requires_grad)
      for (std::size_t i = p; i < self.grad.size(); ++i) B.grad[i - p] += self.grad[i];
  });
}

/// Horizontal concatenation of matrices with equal row counts.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t m = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& t : parts) {
    detail::require_rank(t, 2, "concat_cols");
    if (t.rows() != m) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(t.cols());
    total += t.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto v = parts[p].values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(v.data() + i * widths[p], widths[p], out.data() + i * total + offset);
    offset += widths[p];
  }
  return detail::make_result({m, total}, std::move(out), parts,
                             [m, total, widths](detail::Node& self) {
                               std::size_t off = 0;
                               for (std::size_t p = 0; p < widths.size(); ++p) {
                                 detail::Node& P = self.in(p);
                                 if (P.requires_grad)
                                   for (std::size_t i = 0; i < m; ++i)
                                     for (std::size_t j = 0; j < widths[p]; ++j)
                                       P.grad[i * widths[p] + j] += self.grad[i * total + off + j];
                                 off += widths[p];
                               }
                             });
}

/// Columns [start, start + width) of a matrix.
inline Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t width) {
  detail::require_rank(a, 2, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (start + width > n) throw ShapeError("slice_cols: range exceeds " + shape_str(a.shape()));
  std::vector<double> out(m * width);
  const auto v = a.values();
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(v.data() + i * n + start, width, out.data() + i * width);
  return detail::make_result({m, width}, std::move(out), {&a},
                             [m, n, start, width](detail::Node& self) {
                               detail::Node& A = self.in(0);
                               for (std::size_t i = 0; i < m; ++i)
                                 for (std::size_t j = 0; j < width; ++j)
                                   A.grad[i * n + start + j] += self.grad[i * width + j];
                             });
}

/// Rows of `table` selected by `ids` (embedding lookup); repeated ids accumulate.
inline Tensor gather_rows(const Tensor& table, std::vector<std::size_t> ids) {
  detail::require_rank(table, 2, "gather_rows");
  const std::size_t v = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d);
  const auto tv = table.values();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= v) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " out of range for " +
                       shape_str(table.shape()));
    }
    std::copy_n(tv.data() + ids[i] * d, d, out.data() + i * d);
  }
  const std::size_t count = ids.size();
  return detail::make_result({count, d}, std::move(out), {&table},
                             [d, ids = std::move(ids)](detail::Node& self) {
                               detail::Node& T = self.in(0);
                               for (std::size_t i = 0; i < ids.size(); ++i)
                                 for (std::size_t j = 0; j < d; ++j)
                                   T.grad[ids[i] * d + j] += self.grad[i * d + j];
                             });
}

/// Row i of a matrix as a vector.
inline Tensor row(const Tensor& a, std::size_t i) {
  return reshape(gather_rows(a, {i}), {a.cols()});
}

/// Same-padded 1-D cross-correlation (no activation).
///   out[t, o] = bias[o] + sum_{c, s} kernels[o, c, s] * x[t + s - w/2, c]
/// with zeros outside [0, T).
inline Tensor conv1d_same(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  detail::require_rank(x, 2, "conv1d_same");
  detail::require_rank(kernels, 3, "conv1d_same");
  detail::require_rank(bias, 1, "conv1d_same");
  const std::size_t T = x.rows(), cin = x.cols();
  const std::size_t cout = kernels.dim(0), w = kernels.dim(2);
  if (kernels.dim(1) != cin) {
    throw ShapeError("conv1d_same: input width " + std::to_string(cin) + " vs kernel " +
                     shape_str(kernels.shape()));
  }
  if (bias.dim(0) != cout) throw ShapeError("conv1d_same: bias width mismatch");
  if (w % 2 == 0) throw ShapeError("conv1d_same: kernel width must be odd");
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(w / 2);
  const auto xv = x.values(), kv = kernels.values(), bv = bias.values();
  std::vector<double> out(T * cout);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      double acc = bv[o];
      for (std::size_t s = 0; s < w; ++s) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + s) - r;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
        const double* xr = xv.data() + static_cast<std::size_t>(src) * cin;
        const double* kr = kv.data() + o * cin * w + s;
        for (std::size_t c = 0; c < cin; ++c) acc += kr[c * w] * xr[c];
      }
      out[t * cout + o] = acc;
    }
  }
  return detail::make_result(
      {T, cout}, std::move(out), {&x, &kernels, &bias},
      [T, cin, cout, w, r](detail::Node& self) {
        detail::Node& X = self.in(0);
        detail::Node& K = self.in(1);
        detail::Node& B = self.in(2);
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t o = 0; o < cout; ++o) {
            const double g = self.grad[t * cout + o];
            if (B.requires_grad) B.grad[o] += g;
            for (std::size_t s = 0; s < w; ++s) {
              const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + s) - r;
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
              const std::size_t base = static_cast<std::size_t>(src) * cin;
              for (std::size_t c = 0; c < cin; ++c) {
                const std::size_t ki = o * cin * w + c * w + s;
                if (K.requires_grad) K.grad[ki] += g * X.values[base + c];
                if (X.requires_grad) X.grad[base + c] += g * K.values[ki];
              }
            }
          }
        }
      });
}

/// out[v] = sum over u in neighbors[v] of h[u]. Rows with no neighbors are zero.
inline Tensor neighbor_sum(const Tensor& h, const std::vector<std::vector<std::size_t>>& neighbors) {
  detail::require_rank(h, 2, "neighbor_sum");
  const std::size_t V = h.rows(), F = h.cols();
  if (neighbors.size() != V) {
    throw ShapeError("neighbor_sum: " + std::to_string(V) + " rows but adjacency of size " +
                     std::to_string(neighbors.size()));
  }
  std::vector<double> out(V * F, 0.0);
  const auto hv = h.values();
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t u : neighbors[v])
      for (std::size_t j = 0; j < F; ++j) out[v * F + j] += hv[u * F + j];
  return detail::make_result({V, F}, std::move(out), {&h}, [F, neighbors](detail::Node& self) {
    detail::Node& H = self.in(0);
    for (std::size_t v = 0; v < neighbors.size(); ++v)
      for (std::size_t u : neighbors[v])
        for (std::size_t j = 0; j < F; ++j) H.grad[u * F + j] += self.grad[v * F + j];
  });
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean squared error (1/N) sum (target - pred)^2 over equally shaped operands.
inline Tensor mse(const Tensor& pred, const Tensor& target) {
  detail::require_same_shape(pred, target, "mse");
  const std::size_t n = pred.size();
  if (n == 0) throw ShapeError("mse: empty operands");
  const auto pv = pred.values(), tv = target.values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (tv[i] - pv[i]) * (tv[i] - pv[i]);
  const double inv_n = 1.0 / static_cast<double>(n);
  return detail::make_result({}, {total * inv_n}, {&pred, &target}, [n, inv_n](detail::Node& self) {
    detail::Node& P = self.in(0);
    detail::Node& T = self.in(1);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = 2.0 * (P.values[i] - T.values[i]) * inv_n * g;
      if (P.requires_grad) P.grad[i] += d;
      if (T.requires_grad) T.grad[i] -= d;
    }
  });
}

/// Mean over rows of -log softmax(logits)[i, targets[i]].
inline Tensor cross_entropy_rows(const Tensor& logits, std::vector<std::size_t> targets) {
  detail::require_rank(logits, 2, "cross_entropy_rows");
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m || m == 0) {
    throw ShapeError("cross_entropy_rows: need one target per row (" + std::to_string(m) +
                     " rows, " + std::to_string(targets.size()) + " targets)");
  }
  const auto lv = logits.values();
  std::vector<double> probs(m * n);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] >= n) throw ShapeError("cross_entropy_rows: target out of range");
    const double* row = lv.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (probs[i * n + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= z;
    total += -(row[targets[i]] - mx - std::log(z));
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  return detail::make_result(
      {}, {total * inv_m}, {&logits},
      [m, n, inv_m, probs = std::move(probs), targets = std::move(targets)](detail::Node& self) {
        detail::Node& L = self.in(0);
        const double g = self.grad[0] * inv_m;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) L.grad[i * n + j] += g * probs[i * n + j];
          L.grad[i * n + targets[i]] -= g;
        }
      });
}

// ---------------------------------------------------------------------------
// Reverse pass
// ---------------------------------------------------------------------------

/// Accumulates d(loss)/d(leaf) into every reachable leaf's grad.
///
/// Intermediate gradients are reset at the start of each call, so calling
/// backward twice on the same graph adds the leaf gradients twice.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: root must be a scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<null>")));
  }
  detail::Node* root = loss.node().get();
  if (!root->requires_grad) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // `order` is post-order: inputs precede consumers.
  for (detail::Node* n : order)
    if (!n->is_leaf()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (!(*it)->is_leaf()) (*it)->backward(**it);
}

}  // namespace bindfuse

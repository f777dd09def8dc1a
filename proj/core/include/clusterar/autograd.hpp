// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "clusterar/params.hpp"
#include "clusterar/tensor.hpp"

namespace clusterar {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  [[nodiscard]] bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward()
/// walks them in reverse. Parameter leaves accumulate directly into
/// Parameter::grad.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix<T>& out_grad)>;

  Var constant(Matrix<T> value);
  Var param(Parameter<T>& p);
  Var push(Matrix<T> value, bool needs_grad, Backward backward);

  [[nodiscard]] const Matrix<T>& value(Var v) const;
  [[nodiscard]] bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of `v`, allocated as zeros on first access.
  Matrix<T>& grad(Var v);

  void backward(Var root, T seed = T(1));

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* external = nullptr;
    Matrix<T> own_grad;
    Matrix<T>* grad_target = nullptr;
    bool needs_grad = false;
    bool touched = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

// Graph operations. Every op checks shapes and throws std::invalid_argument
// on mismatch.

/// y = x W^T + b; x: n×in, W: out×in, b: 1×out (optional).
template <typename T>
Var linear(Tape<T>& t, Var x, Var w, Var b = {});
template <typename T>
Var add(Tape<T>& t, Var a, Var b);
template <typename T>
Var scale(Tape<T>& t, Var a, T factor);
template <typename T>
Var layer_norm(Tape<T>& t, Var x, Var gamma, Var beta, T eps = T(1e-5));
template <typename T>
Var gelu(Tape<T>& t, Var x);
template <typename T>
Var softplus(Tape<T>& t, Var x);
/// y = -exp(x); maps a log-magnitude to a negative decay rate.
template <typename T>
Var neg_exp(Tape<T>& t, Var x);
template <typename T>
Var gather_rows(Tape<T>& t, Var x, std::vector<std::uint32_t> rows);
template <typename T>
Var concat_rows(Tape<T>& t, const std::vector<Var>& parts);

/// Input-dependent diagonal SSM scan with zero-order-hold discretization.
/// u, delta: L×D; A: D×d; B, C: L×d. Returns y: L×D with
///   h_t[c,i] = exp(delta[t,c] A[c,i]) h_{t-1}[c,i] + phi(delta A) delta B[t,i] u[t,c]
///   y[t,c]   = sum_i C[t,i] h_t[c,i]
template <typename T>
Var selective_scan(Tape<T>& t, Var u, Var delta, Var A, Var B, Var C);

/// Multi-head softmax attention. q: T×W, k, v: S×W; allow is a T×S
/// row-major permission matrix (nonzero = attend).
template <typename T>
Var attention(Tape<T>& t, Var q, Var k, Var v, std::shared_ptr<const std::vector<std::uint8_t>> allow,
              std::size_t heads);

/// sum_r w_r |pred_r - target_r|^2 / (cols * sum_r w_r); 1×1.
template <typename T>
Var weighted_mse(Tape<T>& t, Var pred, Matrix<T> target, std::vector<T> row_weights);

/// Mean cross-entropy over rows of `logits` against integer labels; 1×1.
template <typename T>
Var cross_entropy(Tape<T>& t, Var logits, std::vector<int> labels);

}  // namespace clusterar

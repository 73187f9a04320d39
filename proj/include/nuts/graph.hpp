// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense row-major tensors.
//
// A Graph is an append-only tape. Every op appends one node holding its
// forward value; parents always precede children, so the tape order is a
// topological order and backward() is a single reverse sweep. Nodes that do
// not depend on a gradient-requiring leaf are never visited on the way back.
//
// Leaves come in two storage flavours: owned (the graph keeps a copy) and
// borrowed (the graph points at a caller-owned tensor that must outlive it).
// Borrowed leaves let many graphs share one set of trained weights without
// copying them.

#ifndef NUTS_GRAPH_HPP
#define NUTS_GRAPH_HPP

#include "nuts/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace nuts {

enum class OpKind : std::uint8_t {
  kConstant,
  kVariable,
  kMatMul,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kAffine,
  kAddBias,
  kTanh,
  kSigmoid,
  kAbs,
  kSoftmax,
  kLogSoftmax,
  kGather,
  kConcatCols,
  kSliceCols,
  kRepeatRows,
  kSelectRows,
  kScaleRows,
  kSum,
  kMean,
  kCrossEntropy,
  kNormalizeRows,
  kRowNorms,
  kMaskColumns,
  kStraightThrough,
  kCustom,
};

std::string_view op_name(OpKind kind);

class Graph;

/// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  /// Valid until the next op is recorded on the same graph.
  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Scalar value of a 1 x 1 node.
  double item() const;
};

/// Result of a backward sweep: dLoss/dNode for every gradient-requiring node.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<Tensor> grads, std::vector<bool> tracked)
      : grads_(std::move(grads)), tracked_(std::move(tracked)) {}

  /// Gradient of the loss with respect to `v`. Nodes that do not require a
  /// gradient (constants) get an all-zero tensor of their shape.
  Tensor of(Var v) const;
  bool tracked(Var v) const { return tracked_.at(static_cast<std::size_t>(v.id)); }

 private:
  std::vector<Tensor> grads_;
  std::vector<bool> tracked_;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Borrowed constant; `value` must outlive the graph.
  Var constant_ref(const Tensor& value);
  Var variable(Tensor value);
  /// Borrowed gradient-requiring leaf (trainable weights).
  Var parameter(const Tensor& value);

  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.borrowed ? *n.borrowed : n.value;
  }
  const Tensor& value(Var v) const { return value(v.id); }
  OpKind kind(int id) const { return nodes_[static_cast<std::size_t>(id)].kind; }
  std::span<const int> parents(int id) const { return nodes_[static_cast<std::size_t>(id)].parents; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Appends an op node. The value must be finite; a NumericError naming the
  /// op is raised otherwise. `backward` is only retained when some parent
  /// requires a gradient.
  Var record(OpKind kind, std::initializer_list<int> parents, Tensor value, BackwardFn backward);
  Var record(OpKind kind, std::vector<int> parents, Tensor value, BackwardFn backward);

  /// Upstream gradient of node `id` during a backward sweep.
  const Tensor& grad(int id) const { return grads_[static_cast<std::size_t>(id)]; }

  /// Adds `delta` into the gradient slot of `id` (no-op for constants).
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& delta) {
    if (!requires_grad(id)) return;
    Tensor& slot = grads_[static_cast<std::size_t>(id)];
    if (slot.size() == 0) {
      slot = delta;
    } else {
      slot += delta;
    }
  }

  /// Mutable gradient slot, zero-initialised on first touch.
  Tensor& grad_slot(int id);

  /// Reverse sweep from a 1 x 1 loss node.
  Gradients backward(Var loss);

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<int> parents;
    Tensor value;
    const Tensor* borrowed = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push_leaf(OpKind kind, Tensor value, const Tensor* borrowed, bool requires_grad);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// ---------------------------------------------------------------------------
// Ops. All operands must belong to the same graph.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
/// Elementwise product.
Var operator*(Var a, Var b);
/// scale * a + shift, elementwise.
Var affine(Var a, double scale, double shift = 0.0);
inline Var operator*(double s, Var a) { return affine(a, s); }
/// Adds a 1 x n row to every row of a.
Var add_bias(Var a, Var bias);
Var tanh(Var a);
Var sigmoid(Var a);
Var abs(Var a);
/// Row-wise softmax.
Var softmax(Var a);
/// Row-wise log-softmax.
Var log_softmax(Var a);
/// Rows of `table` at `ids` (embedding lookup).
Var gather(Var table, std::span<const TokenId> ids);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, Index start, Index count);
/// Stacks `count` copies of a 1 x n row.
Var repeat_rows(Var row, Index count);
/// Row i is taken from `when_true` if take[i], otherwise from `when_false`.
Var select_rows(const std::vector<bool>& take, Var when_true, Var when_false);
/// Multiplies row i by the constant weights[i].
Var scale_rows(Var a, const Eigen::VectorXd& weights);
Var sum(Var a);
Var mean(Var a);
/// Mean over rows with target >= 0 of -log softmax(logits)[row, target].
Var cross_entropy(Var logits, std::span<const int> targets);
/// Each row divided by its l2 norm.
Var normalize_rows(Var a);
/// Column of per-row l2 norms.
Var row_norms(Var a);
/// Columns with allowed[j] == false are pinned to kMaskedLogit.
Var mask_columns(Var logits, const TokenMask& allowed);
/// Forward value is `hard`; the gradient is passed through unchanged to `soft`.
Var straight_through(Var soft, Tensor hard);

/// Finite stand-in for -inf on disallowed logits; exp() of it underflows to 0.
inline constexpr double kMaskedLogit = -1e30;

}  // namespace nuts

#endif  // NUTS_GRAPH_HPP

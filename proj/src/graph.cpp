// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nuts {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kVariable: return "variable";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kAffine: return "affine";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kAbs: return "abs";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kGather: return "gather";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kRepeatRows: return "repeat_rows";
    case OpKind::kSelectRows: return "select_rows";
    case OpKind::kScaleRows: return "scale_rows";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kNormalizeRows: return "normalize_rows";
    case OpKind::kRowNorms: return "row_norms";
    case OpKind::kMaskColumns: return "mask_columns";
    case OpKind::kStraightThrough: return "straight_through";
    case OpKind::kCustom: return "custom";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph->value(id); }

double Var::item() const {
  const Tensor& v = value();
  require(v.rows() == 1 && v.cols() == 1, "item() on a non-scalar node");
  return v(0, 0);
}

Tensor Gradients::of(Var v) const {
  const auto i = static_cast<std::size_t>(v.id);
  if (i < grads_.size() && tracked_[i] && grads_[i].size() != 0) return grads_[i];
  return Tensor::Zero(v.rows(), v.cols());
}

Var Graph::push_leaf(OpKind kind, Tensor value, const Tensor* borrowed, bool requires_grad) {
  const Tensor& check = borrowed ? *borrowed : value;
  if (!check.allFinite()) {
    throw NumericError(std::string(op_name(kind)) + ": non-finite leaf value");
  }
  Node node;
  node.kind = kind;
  node.value = std::move(value);
  node.borrowed = borrowed;
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor value) { return push_leaf(OpKind::kConstant, std::move(value), nullptr, false); }
Var Graph::constant_ref(const Tensor& value) { return push_leaf(OpKind::kConstant, Tensor(), &value, false); }
Var Graph::variable(Tensor value) { return push_leaf(OpKind::kVariable, std::move(value), nullptr, true); }
Var Graph::parameter(const Tensor& value) { return push_leaf(OpKind::kVariable, Tensor(), &value, true); }

Var Graph::record(OpKind kind, std::initializer_list<int> parents, Tensor value, BackwardFn backward) {
  return record(kind, std::vector<int>(parents), std::move(value), std::move(backward));
}

Var Graph::record(OpKind kind, std::vector<int> parents, Tensor value, BackwardFn backward) {
  if (!value.allFinite()) {
    throw NumericError(std::string(op_name(kind)) + ": non-finite forward value");
  }
  Node node;
  node.kind = kind;
  node.requires_grad = std::any_of(parents.begin(), parents.end(), [this](int p) { return requires_grad(p); });
  node.parents = std::move(parents);
  node.value = std::move(value);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Tensor& Graph::grad_slot(int id) {
  Tensor& slot = grads_[static_cast<std::size_t>(id)];
  if (slot.size() == 0) slot = Tensor::Zero(value(id).rows(), value(id).cols());
  return slot;
}

Gradients Graph::backward(Var loss) {
  require(loss.graph == this, "backward: loss belongs to another graph");
  const Tensor& lv = value(loss);
  require(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be a 1 x 1 scalar node");

  grads_.assign(nodes_.size(), Tensor());
  std::vector<bool> tracked(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) tracked[i] = nodes_[i].requires_grad;

  if (requires_grad(loss.id)) {
    grads_[static_cast<std::size_t>(loss.id)] = Tensor::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& node = nodes_[static_cast<std::size_t>(i)];
      if (!node.requires_grad || !node.backward || grads_[static_cast<std::size_t>(i)].size() == 0) continue;
      node.backward(*this, i);
      for (int p : node.parents) {
        const Tensor& g = grads_[static_cast<std::size_t>(p)];
        if (g.size() != 0 && !g.allFinite()) {
          throw NumericError(std::string(op_name(node.kind)) + ": non-finite gradient");
        }
      }
    }
  }
  Gradients out(std::move(grads_), std::move(tracked));
  grads_.clear();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Graph& same_graph(Var a, Var b) {
  require(a.graph != nullptr && a.graph == b.graph, "operands belong to different graphs");
  return *a.graph;
}

void require_same_shape(Var a, Var b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

Tensor row_softmax(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const auto shifted = (x.row(r).array() - m).eval();
    // Vectorised exp clamps its argument near -708; below that the exact value underflows.
    out.row(r) = (shifted < -745.0).select(0.0, shifted.exp()).matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Tensor row_log_softmax(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    out.row(r) = (x.row(r).array() - lse).matrix();
  }
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kNormFloor = 1e-12;

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tensor out = a.value() * b.value();
  return g.record(OpKind::kMatMul, {a.id, b.id}, std::move(out), [ai = a.id, bi = b.id](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    if (g.requires_grad(ai)) g.accumulate(ai, up * g.value(bi).transpose());
    if (g.requires_grad(bi)) g.accumulate(bi, g.value(ai).transpose() * up);
  });
}

Var transpose(Var a) {
  Tensor out = a.value().transpose();
  return a.graph->record(OpKind::kTranspose, {a.id}, std::move(out),
                         [ai = a.id](Graph& g, int self) { g.accumulate(ai, g.grad(self).transpose()); });
}

Var operator+(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape(a, b, "add");
  Tensor out = a.value() + b.value();
  return g.record(OpKind::kAdd, {a.id, b.id}, std::move(out), [ai = a.id, bi = b.id](Graph& g, int self) {
    g.accumulate(ai, g.grad(self));
    g.accumulate(bi, g.grad(self));
  });
}

Var operator-(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape(a, b, "sub");
  Tensor out = a.value() - b.value();
  return g.record(OpKind::kSub, {a.id, b.id}, std::move(out), [ai = a.id, bi = b.id](Graph& g, int self) {
    g.accumulate(ai, g.grad(self));
    g.accumulate(bi, -g.grad(self));
  });
}

Var operator*(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape(a, b, "mul");
  Tensor out = a.value().cwiseProduct(b.value());
  return g.record(OpKind::kMul, {a.id, b.id}, std::move(out), [ai = a.id, bi = b.id](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    if (g.requires_grad(ai)) g.accumulate(ai, up.cwiseProduct(g.value(bi)));
    if (g.requires_grad(bi)) g.accumulate(bi, up.cwiseProduct(g.value(ai)));
  });
}

Var affine(Var a, double scale, double shift) {
  Tensor out = (scale * a.value().array() + shift).matrix();
  return a.graph->record(OpKind::kAffine, {a.id}, std::move(out),
                         [ai = a.id, scale](Graph& g, int self) { g.accumulate(ai, scale * g.grad(self)); });
}

Var add_bias(Var a, Var bias) {
  Graph& g = same_graph(a, bias);
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias: bias must be 1 x cols(a)");
  Tensor out = a.value().rowwise() + bias.value().row(0);
  return g.record(OpKind::kAddBias, {a.id, bias.id}, std::move(out), [ai = a.id, bi = bias.id](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    g.accumulate(ai, up);
    if (g.requires_grad(bi)) g.accumulate(bi, up.colwise().sum());
  });
}

Var tanh(Var a) {
  Tensor out = a.value().array().tanh().matrix();
  return a.graph->record(OpKind::kTanh, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor& y = g.value(self);
    g.accumulate(ai, g.grad(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  return a.graph->record(OpKind::kSigmoid, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor& y = g.value(self);
    g.accumulate(ai, g.grad(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var abs(Var a) {
  Tensor out = a.value().cwiseAbs();
  return a.graph->record(OpKind::kAbs, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor sign = g.value(ai).unaryExpr([](double x) { return double((x > 0) - (x < 0)); });
    g.accumulate(ai, g.grad(self).cwiseProduct(sign));
  });
}

Var softmax(Var a) {
  Tensor out = row_softmax(a.value());
  return a.graph->record(OpKind::kSoftmax, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.grad(self);
    const Eigen::VectorXd dot = up.cwiseProduct(y).rowwise().sum();
    g.accumulate(ai, y.cwiseProduct((up.colwise() - dot)));
  });
}

Var log_softmax(Var a) {
  Tensor out = row_log_softmax(a.value());
  return a.graph->record(OpKind::kLogSoftmax, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.grad(self);
    const Eigen::VectorXd total = up.rowwise().sum();
    const Tensor probs = y.array().exp().matrix();
    g.accumulate(ai, up - (probs.array().colwise() * total.array()).matrix());
  });
}

Var gather(Var table, std::span<const TokenId> ids) {
  const Tensor& t = table.value();
  Tensor out(static_cast<Index>(ids.size()), t.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && ids[r] < t.rows(), "gather: id out of range");
    out.row(static_cast<Index>(r)) = t.row(ids[r]);
  }
  return table.graph->record(OpKind::kGather, {table.id}, std::move(out),
                             [ti = table.id, rows = TokenIds(ids.begin(), ids.end())](Graph& g, int self) {
                               const Tensor& up = g.grad(self);
                               Tensor& slot = g.grad_slot(ti);
                               for (std::size_t r = 0; r < rows.size(); ++r) {
                                 slot.row(rows[r]) += up.row(static_cast<Index>(r));
                               }
                             });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no operands");
  Graph& g = *parts.front().graph;
  const Index rows = parts.front().rows();
  Index width = 0;
  std::vector<int> ids;
  std::vector<Index> widths;
  for (const Var& p : parts) {
    require(p.graph == &g, "concat_cols: operands belong to different graphs");
    require(p.rows() == rows, "concat_cols: row counts differ");
    ids.push_back(p.id);
    widths.push_back(p.cols());
    width += p.cols();
  }
  Tensor out(rows, width);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return g.record(OpKind::kConcatCols, ids, std::move(out), [ids, widths](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    Index at = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      g.accumulate(ids[i], up.middleCols(at, widths[i]));
      at += widths[i];
    }
  });
}

Var slice_cols(Var a, Index start, Index count) {
  require(start >= 0 && count > 0 && start + count <= a.cols(), "slice_cols: range out of bounds");
  Tensor out = a.value().middleCols(start, count);
  return a.graph->record(OpKind::kSliceCols, {a.id}, std::move(out), [ai = a.id, start, count](Graph& g, int self) {
    g.grad_slot(ai).middleCols(start, count) += g.grad(self);
  });
}

Var repeat_rows(Var row, Index count) {
  require(row.rows() == 1 && count >= 1, "repeat_rows: expects a single row and count >= 1");
  Tensor out = row.value().replicate(count, 1);
  return row.graph->record(OpKind::kRepeatRows, {row.id}, std::move(out),
                           [ri = row.id](Graph& g, int self) { g.accumulate(ri, g.grad(self).colwise().sum()); });
}

Var select_rows(const std::vector<bool>& take, Var when_true, Var when_false) {
  Graph& g = same_graph(when_true, when_false);
  require_same_shape(when_true, when_false, "select_rows");
  require(static_cast<Index>(take.size()) == when_true.rows(), "select_rows: mask length differs from rows");
  Tensor out = when_false.value();
  for (Index r = 0; r < out.rows(); ++r) {
    if (take[static_cast<std::size_t>(r)]) out.row(r) = when_true.value().row(r);
  }
  return g.record(OpKind::kSelectRows, {when_true.id, when_false.id}, std::move(out),
                  [take, ti = when_true.id, fi = when_false.id](Graph& g, int self) {
                    const Tensor& up = g.grad(self);
                    const bool need_t = g.requires_grad(ti);
                    const bool need_f = g.requires_grad(fi);
                    Tensor* gt = need_t ? &g.grad_slot(ti) : nullptr;
                    Tensor* gf = need_f ? &g.grad_slot(fi) : nullptr;
                    for (Index r = 0; r < up.rows(); ++r) {
                      if (take[static_cast<std::size_t>(r)]) {
                        if (gt) gt->row(r) += up.row(r);
                      } else if (gf) {
                        gf->row(r) += up.row(r);
                      }
                    }
                  });
}

Var scale_rows(Var a, const Eigen::VectorXd& weights) {
  require(weights.size() == a.rows(), "scale_rows: weight count differs from rows");
  Tensor out = weights.asDiagonal() * a.value();
  return a.graph->record(OpKind::kScaleRows, {a.id}, std::move(out), [ai = a.id, weights](Graph& g, int self) {
    g.accumulate(ai, weights.asDiagonal() * g.grad(self));
  });
}

Var sum(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph->record(OpKind::kSum, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor& v = g.value(ai);
    g.accumulate(ai, Tensor::Constant(v.rows(), v.cols(), g.grad(self)(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  Tensor out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return a.graph->record(OpKind::kMean, {a.id}, std::move(out), [ai = a.id, n](Graph& g, int self) {
    const Tensor& v = g.value(ai);
    g.accumulate(ai, Tensor::Constant(v.rows(), v.cols(), g.grad(self)(0, 0) / n));
  });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& x = logits.value();
  require(static_cast<Index>(targets.size()) == x.rows(), "cross_entropy: one target per row required");
  const Tensor logp = row_log_softmax(x);
  double total = 0.0;
  int counted = 0;
  for (Index r = 0; r < x.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    require(t < x.cols(), "cross_entropy: target out of range");
    total -= logp(r, t);
    ++counted;
  }
  require(counted > 0, "cross_entropy: no scored rows");
  Tensor out(1, 1);
  out(0, 0) = total / counted;
  return logits.graph->record(OpKind::kCrossEntropy, {logits.id}, std::move(out),
                              [li = logits.id, logp, counted, t = std::vector<int>(targets.begin(), targets.end())](
                                  Graph& g, int self) {
                                const double scale = g.grad(self)(0, 0) / counted;
                                Tensor d = logp.array().exp().matrix();
                                for (Index r = 0; r < d.rows(); ++r) {
                                  const int target = t[static_cast<std::size_t>(r)];
                                  if (target < 0) {
                                    d.row(r).setZero();
                                  } else {
                                    d(r, target) -= 1.0;
                                  }
                                }
                                g.accumulate(li, scale * d);
                              });
}

Var normalize_rows(Var a) {
  const Eigen::VectorXd norms = a.value().rowwise().norm().cwiseMax(kNormFloor);
  Tensor out = norms.cwiseInverse().asDiagonal() * a.value();
  return a.graph->record(OpKind::kNormalizeRows, {a.id}, std::move(out), [ai = a.id, norms](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.grad(self);
    const Eigen::VectorXd dot = up.cwiseProduct(y).rowwise().sum();
    const Tensor along = dot.asDiagonal() * y;
    g.accumulate(ai, norms.cwiseInverse().asDiagonal() * (up - along));
  });
}

Var row_norms(Var a) {
  Tensor out = (a.value().rowwise().squaredNorm().array() + kNormFloor * kNormFloor).sqrt().matrix();
  return a.graph->record(OpKind::kRowNorms, {a.id}, std::move(out), [ai = a.id](Graph& g, int self) {
    const Tensor& n = g.value(self);
    const Eigen::VectorXd w = g.grad(self).col(0).cwiseQuotient(n.col(0));
    g.accumulate(ai, w.asDiagonal() * g.value(ai));
  });
}

Var mask_columns(Var logits, const TokenMask& allowed) {
  require(static_cast<Index>(allowed.size()) == logits.cols(), "mask_columns: mask width differs from cols");
  Tensor out = logits.value();
  for (Index j = 0; j < out.cols(); ++j) {
    if (!allowed[static_cast<std::size_t>(j)]) out.col(j).setConstant(kMaskedLogit);
  }
  return logits.graph->record(OpKind::kMaskColumns, {logits.id}, std::move(out),
                              [li = logits.id, allowed](Graph& g, int self) {
                                Tensor d = g.grad(self);
                                for (Index j = 0; j < d.cols(); ++j) {
                                  if (!allowed[static_cast<std::size_t>(j)]) d.col(j).setZero();
                                }
                                g.accumulate(li, d);
                              });
}

Var straight_through(Var soft, Tensor hard) {
  require(hard.rows() == soft.rows() && hard.cols() == soft.cols(), "straight_through: shape mismatch");
  return soft.graph->record(OpKind::kStraightThrough, {soft.id}, std::move(hard),
                            [si = soft.id](Graph& g, int self) { g.accumulate(si, g.grad(self)); });
}

}  // namespace nuts

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/layers.hpp"

#include <cmath>

namespace nuts {

Bound::Bound(Graph& graph, const ParamSet& params, bool trainable)
    : Bound(graph, params, [trainable](const std::string&) { return trainable; }) {}

Bound::Bound(Graph& graph, const ParamSet& params, const std::function<bool(const std::string&)>& trainable)
    : graph_(&graph) {
  for (const auto& [name, tensor] : params) {
    vars_.emplace(name, trainable(name) ? graph.parameter(tensor) : graph.constant_ref(tensor));
  }
}

Var Bound::operator[](const std::string& name) const {
  const auto it = vars_.find(name);
  require(it != vars_.end(), "missing parameter '" + name + "'");
  return it->second;
}

Bound bind_partial(Graph& graph, const ParamSet& params, std::initializer_list<std::string_view> trainable_prefixes) {
  const std::vector<std::string_view> prefixes(trainable_prefixes);
  return Bound(graph, params, [&prefixes](const std::string& name) {
    for (auto prefix : prefixes) {
      if (name.rfind(prefix, 0) == 0) return true;
    }
    return false;
  });
}

void init_linear(ParamSet& params, const std::string& name, Index in, Index out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  params[name + ".W"] = uniform_matrix<double>(in, out, bound, rng);
  params[name + ".b"] = Tensor::Zero(1, out);
}

Var linear(const Bound& p, const std::string& name, Var x) {
  return add_bias(matmul(x, p[name + ".W"]), p[name + ".b"]);
}

void init_embedding(ParamSet& params, const std::string& name, Index vocab, Index dim, Rng& rng) {
  params[name] = 0.3 * standard_normal<double>(vocab, dim, rng);
}

void init_lstm(ParamSet& params, const std::string& name, Index in, Index hidden, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  params[name + ".Wx"] = uniform_matrix<double>(in, 4 * hidden, bound, rng);
  params[name + ".Wh"] = uniform_matrix<double>(hidden, 4 * hidden, bound, rng);
  Tensor bias = Tensor::Zero(1, 4 * hidden);
  bias.middleCols(hidden, hidden).setOnes();
  params[name + ".b"] = bias;
}

LstmWeights lstm_weights(const Bound& p, const std::string& name) {
  LstmWeights w{p[name + ".Wx"], p[name + ".Wh"], p[name + ".b"], 0};
  w.hidden = w.recurrent.rows();
  return w;
}

LstmState lstm_zero_state(Graph& g, Index rows, Index hidden) {
  return {g.constant(Tensor::Zero(rows, hidden)), g.constant(Tensor::Zero(rows, hidden))};
}

LstmState lstm_step(const LstmWeights& w, Var x, const LstmState& state) {
  const Index h = w.hidden;
  const Var gates = add_bias(matmul(x, w.input) + matmul(state.h, w.recurrent), w.bias);
  const Var i = sigmoid(slice_cols(gates, 0, h));
  const Var f = sigmoid(slice_cols(gates, h, h));
  const Var cand = tanh(slice_cols(gates, 2 * h, h));
  const Var o = sigmoid(slice_cols(gates, 3 * h, h));
  const Var c = f * state.c + i * cand;
  return {o * tanh(c), c};
}

LstmState lstm_step_masked(const LstmWeights& w, Var x, const LstmState& state, const std::vector<bool>& keep) {
  const LstmState next = lstm_step(w, x, state);
  bool all = true;
  for (bool k : keep) all = all && k;
  if (all) return next;
  return {select_rows(keep, next.h, state.h), select_rows(keep, next.c, state.c)};
}

LstmState repeat_state(const LstmState& s, Index rows) { return {repeat_rows(s.h, rows), repeat_rows(s.c, rows)}; }

void round_to_storage_precision(ParamSet& params) {
  for (auto& [name, t] : params) {
    t = t.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  }
}

}  // namespace nuts

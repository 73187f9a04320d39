// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_LAYERS_HPP
#define NUTS_LAYERS_HPP

#include "nuts/graph.hpp"

#include <functional>
#include <map>
#include <string>

namespace nuts {

/// Named weight tensors of one model, iterated in lexicographic name order.
using ParamSet = std::map<std::string, Tensor>;

/// Parameters of a ParamSet bound as leaves of one graph.
class Bound {
 public:
  Bound(Graph& graph, const ParamSet& params, bool trainable);
  Bound(Graph& graph, const ParamSet& params, const std::function<bool(const std::string&)>& trainable);

  Var operator[](const std::string& name) const;
  Graph& graph() const { return *graph_; }
  const std::map<std::string, Var>& vars() const { return vars_; }

 private:
  Graph* graph_;
  std::map<std::string, Var> vars_;
};

/// Bound view that marks only the names starting with one of `trainable_prefixes`
/// as gradient-requiring; everything else is a borrowed constant.
Bound bind_partial(Graph& graph, const ParamSet& params, std::initializer_list<std::string_view> trainable_prefixes);

void init_linear(ParamSet& params, const std::string& name, Index in, Index out, Rng& rng);
Var linear(const Bound& p, const std::string& name, Var x);

void init_embedding(ParamSet& params, const std::string& name, Index vocab, Index dim, Rng& rng);

struct LstmWeights {
  Var input;
  Var recurrent;
  Var bias;
  Index hidden = 0;
};

struct LstmState {
  Var h;
  Var c;
};

/// Gate order i, f, g, o; forget-gate bias starts at 1.
void init_lstm(ParamSet& params, const std::string& name, Index in, Index hidden, Rng& rng);
LstmWeights lstm_weights(const Bound& p, const std::string& name);
LstmState lstm_zero_state(Graph& g, Index rows, Index hidden);
LstmState lstm_step(const LstmWeights& w, Var x, const LstmState& state);
/// Rows with keep[i] == false retain their previous state.
LstmState lstm_step_masked(const LstmWeights& w, Var x, const LstmState& state, const std::vector<bool>& keep);
LstmState repeat_state(const LstmState& s, Index rows);

/// Rounds every weight to the nearest 32-bit float, the precision checkpoints
/// store, so a saved model reloads bit-identically.
void round_to_storage_precision(ParamSet& params);

}  // namespace nuts

#endif  // NUTS_LAYERS_HPP

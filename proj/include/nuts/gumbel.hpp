// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_GUMBEL_HPP
#define NUTS_GUMBEL_HPP

#include "nuts/graph.hpp"

namespace nuts {

/// A relaxed categorical draw. `onehot` aliases `soft` when the draw is not
/// hard; otherwise its forward value is the argmax one-hot and its backward
/// pass is the identity onto `soft` (straight-through).
struct GumbelSample {
  Var soft;
  Var onehot;
};

/// i.i.d. Gumbel(0, 1) noise, -log(-log(U)) with U clamped into (1e-12, 1 - 1e-12).
Tensor sample_gumbel(Index rows, Index cols, Rng& rng);

/// softmax((logits + G) / tau) row-wise, with G drawn from `rng`.
GumbelSample gumbel_softmax(Var logits, double tau, Rng& rng, bool hard);

/// Same relaxation with caller-supplied noise (zero noise gives a plain
/// tempered softmax).
GumbelSample gumbel_softmax(Var logits, double tau, const Tensor& noise, bool hard);

/// Row-wise argmax one-hot of `probs`.
Tensor onehot_argmax(const Tensor& probs);

}  // namespace nuts

#endif  // NUTS_GUMBEL_HPP

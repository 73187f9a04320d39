// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/gumbel.hpp"

#include <cmath>

namespace nuts {

namespace {
constexpr double kUniformFloor = 1e-12;
}

Tensor sample_gumbel(Index rows, Index cols, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) {
    const double u = kUniformFloor + (1.0 - 2.0 * kUniformFloor) * unit(rng);
    out.data()[i] = -std::log(-std::log(u));
  }
  return out;
}

Tensor onehot_argmax(const Tensor& probs) {
  Tensor out = Tensor::Zero(probs.rows(), probs.cols());
  for (Index r = 0; r < probs.rows(); ++r) out(r, argmax(probs.row(r))) = 1.0;
  return out;
}

GumbelSample gumbel_softmax(Var logits, double tau, const Tensor& noise, bool hard) {
  require(tau > 0.0, "gumbel_softmax: temperature must be positive");
  require(noise.rows() == logits.rows() && noise.cols() == logits.cols(), "gumbel_softmax: noise shape mismatch");
  Graph& g = *logits.graph;
  const Var perturbed = logits + g.constant(noise);
  const Var soft = softmax(affine(perturbed, 1.0 / tau));
  if (!hard) return {soft, soft};
  return {soft, straight_through(soft, onehot_argmax(soft.value()))};
}

GumbelSample gumbel_softmax(Var logits, double tau, Rng& rng, bool hard) {
  require(tau > 0.0, "gumbel_softmax: temperature must be positive");
  return gumbel_softmax(logits, tau, sample_gumbel(logits.rows(), logits.cols(), rng), hard);
}

}  // namespace nuts

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/gumbel.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace nuts;

namespace {

Tensor softmax_of(const Tensor& logits) {
  Tensor p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

std::vector<double> hard_frequencies(const Tensor& logits, double tau, int draws, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> freq(static_cast<std::size_t>(logits.cols()), 0.0);
  for (int k = 0; k < draws; ++k) {
    Graph g;
    const GumbelSample s = gumbel_softmax(g.constant(logits), tau, rng, true);
    const Tensor& h = s.onehot.value();
    for (Index j = 0; j < h.cols(); ++j) freq[static_cast<std::size_t>(j)] += h(0, j);
  }
  for (auto& f : freq) f /= draws;
  return freq;
}

}  // namespace

TEST_CASE("hard samples follow the softmax: total variation within 0.02 over 1e5 draws") {
  Tensor logits(1, 5);
  logits << 1.0, -0.5, 0.3, 2.0, -1.2;
  const Tensor p = softmax_of(logits);
  for (const double tau : {1.0, 0.3}) {
    CAPTURE(tau);
    const std::vector<double> freq = hard_frequencies(logits, tau, 100000, 31);
    double tv = 0.0;
    for (Index j = 0; j < p.cols(); ++j) tv += std::abs(freq[static_cast<std::size_t>(j)] - p(0, j));
    tv *= 0.5;
    CHECK(tv <= 0.02);
  }
}

TEST_CASE("a dominant logit is selected almost always") {
  Tensor logits(1, 3);
  logits << 10.0, 0.0, 0.0;
  CHECK(hard_frequencies(logits, 0.5, 10000, 5)[0] >= 0.99);
}

TEST_CASE("straight-through backward equals soft backward on the same sample") {
  Rng rng(9);
  const Tensor logits = nuts::testing::random_tensor(3, 6, 10);
  const Tensor noise = sample_gumbel(3, 6, rng);
  const Tensor w = nuts::testing::random_tensor(3, 6, 11);
  Tensor grad_soft, grad_st;
  {
    Graph g;
    const Var l = g.variable(logits);
    const GumbelSample s = gumbel_softmax(l, 0.7, noise, false);
    grad_soft = g.backward(sum(s.onehot * g.constant(w))).of(l);
  }
  {
    Graph g;
    const Var l = g.variable(logits);
    const GumbelSample s = gumbel_softmax(l, 0.7, noise, true);
    CHECK(s.onehot.value() == onehot_argmax(s.soft.value()));
    grad_st = g.backward(sum(s.onehot * g.constant(w))).of(l);
  }
  CHECK(grad_st == grad_soft);
}

TEST_CASE("soft sample gradient matches finite differences") {
  Rng rng(12);
  const Tensor noise = sample_gumbel(2, 5, rng);
  const double err = nuts::testing::op_gradient_error(
      {nuts::testing::random_tensor(2, 5, 13)},
      [&](Graph&, const std::vector<Var>& v) { return gumbel_softmax(v[0], 0.4, noise, false).soft; });
  CHECK(err < 1e-4);
}

TEST_CASE("noise is finite and seed-deterministic") {
  Rng a(3), b(3);
  const Tensor x = sample_gumbel(50, 50, a);
  CHECK(x == sample_gumbel(50, 50, b));
  CHECK(x.allFinite());
  // Gumbel(0,1) mean is the Euler-Mascheroni constant.
  Rng c(4);
  CHECK(sample_gumbel(200, 500, c).mean() == doctest::Approx(0.5772).epsilon(0.02));
}

TEST_CASE("temperature must be positive") {
  Graph g;
  Rng rng(1);
  CHECK_THROWS_AS(gumbel_softmax(g.constant(Tensor::Zero(1, 3)), 0.0, rng, true), ContractViolation);
}

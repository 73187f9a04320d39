// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/graph.hpp"
#include "nuts/layers.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace nuts;
using nuts::testing::op_gradient_error;
using nuts::testing::random_tensor;

namespace {

constexpr double kTol = 1e-4;

Tensor away_from_zero(Tensor t) {
  for (Index i = 0; i < t.size(); ++i) t.data()[i] += t.data()[i] >= 0 ? 0.3 : -0.3;
  return t;
}

}  // namespace

TEST_CASE("binary and affine ops match finite differences") {
  const Tensor a = random_tensor(3, 4, 1);
  const Tensor b = random_tensor(3, 4, 2);
  const Tensor c = random_tensor(4, 5, 3);
  CHECK(op_gradient_error({a, c}, [](Graph&, const std::vector<Var>& v) { return matmul(v[0], v[1]); }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return transpose(v[0]); }) < kTol);
  CHECK(op_gradient_error({a, b}, [](Graph&, const std::vector<Var>& v) { return v[0] + v[1]; }) < kTol);
  CHECK(op_gradient_error({a, b}, [](Graph&, const std::vector<Var>& v) { return v[0] - v[1]; }) < kTol);
  CHECK(op_gradient_error({a, b}, [](Graph&, const std::vector<Var>& v) { return v[0] * v[1]; }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return affine(v[0], -2.5, 0.7); }) < kTol);
  CHECK(op_gradient_error({a, random_tensor(1, 4, 4)},
                          [](Graph&, const std::vector<Var>& v) { return add_bias(v[0], v[1]); }) < kTol);
}

TEST_CASE("elementwise nonlinearities match finite differences") {
  const Tensor a = random_tensor(4, 3, 5);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return tanh(v[0]); }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return sigmoid(v[0]); }) < kTol);
  CHECK(op_gradient_error({away_from_zero(a)}, [](Graph&, const std::vector<Var>& v) { return abs(v[0]); }) < kTol);
}

TEST_CASE("row-wise softmax family matches finite differences") {
  const Tensor a = random_tensor(3, 6, 6, 2.0);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return softmax(v[0]); }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return log_softmax(v[0]); }) < kTol);
  const std::vector<int> targets = {2, -1, 5};
  CHECK(op_gradient_error({a}, [&](Graph&, const std::vector<Var>& v) { return cross_entropy(v[0], targets); }) <
        kTol);
  TokenMask allowed(6, true);
  allowed[1] = allowed[4] = false;
  CHECK(op_gradient_error({a}, [&](Graph&, const std::vector<Var>& v) {
          return softmax(mask_columns(v[0], allowed));
        }) < kTol);
}

TEST_CASE("indexing and reshaping ops match finite differences") {
  const Tensor table = random_tensor(7, 3, 7);
  const std::vector<TokenId> ids = {4, 0, 4, 6};
  CHECK(op_gradient_error({table}, [&](Graph&, const std::vector<Var>& v) { return gather(v[0], ids); }) < kTol);

  const Tensor a = random_tensor(3, 2, 8);
  const Tensor b = random_tensor(3, 4, 9);
  CHECK(op_gradient_error({a, b}, [](Graph&, const std::vector<Var>& v) {
          const std::vector<Var> parts = {v[1], v[0], v[1]};
          return concat_cols(parts);
        }) < kTol);
  CHECK(op_gradient_error({b}, [](Graph&, const std::vector<Var>& v) { return slice_cols(v[0], 1, 2); }) < kTol);
  CHECK(op_gradient_error({random_tensor(1, 4, 10)},
                          [](Graph&, const std::vector<Var>& v) { return repeat_rows(v[0], 5); }) < kTol);
  const std::vector<bool> take = {true, false, true};
  CHECK(op_gradient_error({b, random_tensor(3, 4, 11)},
                          [&](Graph&, const std::vector<Var>& v) { return select_rows(take, v[0], v[1]); }) < kTol);
  Eigen::VectorXd w(3);
  w << 0.5, -2.0, 3.0;
  CHECK(op_gradient_error({b}, [&](Graph&, const std::vector<Var>& v) { return scale_rows(v[0], w); }) < kTol);
}

TEST_CASE("reductions and norms match finite differences") {
  const Tensor a = random_tensor(3, 5, 12);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return sum(v[0]); }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return mean(v[0]); }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return normalize_rows(v[0]); }) < kTol);
  CHECK(op_gradient_error({a}, [](Graph&, const std::vector<Var>& v) { return row_norms(v[0]); }) < kTol);
}

TEST_CASE("composite layers match finite differences") {
  Rng rng(13);
  ParamSet params;
  init_linear(params, "lin", 4, 3, rng);
  init_lstm(params, "cell", 4, 3, rng);
  const Tensor x = random_tensor(2, 4, 14);
  const Tensor h0 = random_tensor(2, 3, 15, 0.5);
  const Tensor c0 = random_tensor(2, 3, 16, 0.5);

  // Gradients with respect to the weights, through a two-step masked LSTM and a linear head.
  for (const std::string name : {"lin.W", "lin.b", "cell.Wx", "cell.Wh", "cell.b"}) {
    CAPTURE(name);
    REQUIRE(params.count(name) == 1);
    const double err = op_gradient_error({params.at(name), x, h0, c0}, [&](Graph& g, const std::vector<Var>& v) {
      const Bound p(g, params, false);
      std::map<std::string, Var> vars = p.vars();
      vars[name] = v[0];
      LstmWeights w{vars["cell.Wx"], vars["cell.Wh"], vars["cell.b"], 3};
      LstmState s{v[2], v[3]};
      s = lstm_step(w, v[1], s);
      s = lstm_step_masked(w, tanh(v[1]), s, {true, false});
      return add_bias(matmul(v[1], vars["lin.W"]), vars["lin.b"]) + concat_cols(std::vector<Var>{s.h}) * s.c;
    });
    CHECK(err < kTol);
  }
}

TEST_CASE("straight-through forwards the hard value and passes the gradient to the soft input") {
  const Tensor soft = random_tensor(2, 3, 17);
  Tensor hard = Tensor::Zero(2, 3);
  hard(0, 1) = hard(1, 2) = 1.0;
  const Tensor w = random_tensor(2, 3, 18);
  Graph g;
  const Var s = g.variable(soft);
  const Var st = straight_through(s, hard);
  CHECK(st.value() == hard);
  const Gradients grads = g.backward(sum(st * g.constant(w)));
  CHECK(grads.of(s) == w);
}

TEST_CASE("constants receive no gradient and untouched branches stay zero") {
  Graph g;
  const Var x = g.variable(random_tensor(2, 2, 19));
  const Var k = g.constant(random_tensor(2, 2, 20));
  const Var unused = g.variable(random_tensor(2, 2, 21));
  const Gradients grads = g.backward(sum(x * k));
  CHECK_FALSE(grads.tracked(k));
  CHECK(grads.of(k).isZero());
  CHECK(grads.of(unused).isZero());
  CHECK(grads.of(x) == g.value(k));
}

TEST_CASE("non-finite values raise NumericError naming the op") {
  Graph g;
  Tensor big(1, 1);
  big(0, 0) = std::numeric_limits<double>::max();
  const Var a = g.variable(big);
  CHECK_THROWS_AS(affine(a, 10.0), NumericError);
  try {
    affine(a, 10.0);
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("affine") != std::string::npos);
  }
}

TEST_CASE("masked columns vanish from the softmax") {
  Graph g;
  const Var a = g.variable(random_tensor(2, 4, 22));
  TokenMask allowed = {true, false, true, false};
  const Tensor p = softmax(mask_columns(a, allowed)).value();
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 3) == 0.0);
  CHECK(p.row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("shape mismatches are contract violations") {
  Graph g;
  const Var a = g.variable(random_tensor(2, 3, 23));
  const Var b = g.variable(random_tensor(2, 3, 24));
  CHECK_THROWS_AS(matmul(a, b), ContractViolation);
  CHECK_THROWS_AS(g.backward(a), ContractViolation);
}

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/models.hpp"
#include "nuts/synthetic.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace nuts;
using nuts::testing::numeric_gradient;
using nuts::testing::relative_error;

namespace {

struct Fixture {
  Split split = make_synthetic(Task::kSentiment, 4, {200, 40, 40});
  Vocab vocab = build_vocab(split.train, 1);
  std::vector<Example> dev = encode(vocab, split.dev);
  AraeDims adims{6, 8, 10, 7, 9, 9};
  ARAEModel arae = init_arae(vocab, adims, 3);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

Tensor onehot_row(TokenId id, std::size_t size) {
  Tensor t = Tensor::Zero(1, static_cast<Index>(size));
  t(0, id) = 1.0;
  return t;
}

}  // namespace

TEST_CASE("untrained LM scores every sequence at ln|V| exactly") {
  const ScoringLM lm = init_lm(fx().vocab, {8, 12}, 5);
  const double uniform = std::log(static_cast<double>(fx().vocab.size()));
  CHECK(lm_avg_ce(lm, Tokens{"the", "food", "was"}) == doctest::Approx(uniform).epsilon(1e-12));
  CHECK(lm_avg_ce(lm, Tokens{"qqq"}) == doctest::Approx(uniform).epsilon(1e-12));
  CHECK_THROWS(lm_avg_ce(lm, Tokens{}));
}

TEST_CASE("generator and encoder produce unit-norm latents") {
  const ARAEModel& m = fx().arae;
  Rng rng(1);
  const Tensor z = generate(m, standard_normal<double>(1, m.dims.noise, rng));
  CHECK(z.cols() == m.dims.latent);
  CHECK(z.norm() == doctest::Approx(1.0));
  Graph g;
  const Bound p(g, m.params, false);
  const Var codes = encode(p, {fx().dev[0].text, fx().dev[1].text});
  CHECK(codes.rows() == 2);
  CHECK(codes.value().row(1).norm() == doctest::Approx(1.0));
}

TEST_CASE("analytic critic input gradient matches finite differences") {
  const ARAEModel& m = fx().arae;
  Rng rng(2);
  const Tensor z = standard_normal<double>(3, m.dims.latent, rng);
  Graph g;
  const Bound p(g, m.params, false);
  const Tensor analytic = critic_input_gradient(p, g.constant(z)).value();
  for (Index r = 0; r < z.rows(); ++r) {
    const auto f = [&](const Tensor& row) {
      Graph h;
      const Bound q(h, m.params, false);
      return critic(q, h.constant(row)).item();
    };
    CHECK(relative_error(analytic.row(r), numeric_gradient(f, z.row(r))) < 1e-6);
  }
}

TEST_CASE("gradient penalty is differentiable in the critic weights") {
  const ARAEModel& m = fx().arae;
  Rng rng(3);
  const Tensor z = standard_normal<double>(2, m.dims.latent, rng);
  const auto penalty = [&](Graph& g, const Bound& p) {
    const Var norms = row_norms(critic_input_gradient(p, g.constant(z)));
    const Var d = affine(norms, 1.0, -1.0);
    return mean(d * d);
  };
  for (const std::string name : {"critic.l1.W", "critic.l2.b", "critic.out.W"}) {
    CAPTURE(name);
    Graph g;
    const Bound p(g, m.params, true);
    const Tensor analytic = g.backward(penalty(g, p)).of(p[name]);
    const auto f = [&](const Tensor& w) {
      ParamSet local = m.params;
      local.at(name) = w;
      Graph h;
      const Bound q(h, local, false);
      return penalty(h, q).item();
    };
    CHECK(relative_error(analytic, numeric_gradient(f, m.params.at(name))) < 1e-5);
  }
}

TEST_CASE("decoding yields exactly L allowed tokens") {
  const ARAEModel& m = fx().arae;
  TokenMask allowed(m.vocab.size(), false);
  for (const char* w : {"the", "food", "we", "service"}) {
    if (m.vocab.contains(w)) allowed[static_cast<std::size_t>(m.vocab.id(w))] = true;
  }
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Tensor z = generate(m, standard_normal<double>(1, m.dims.noise, rng));
    for (const int len : {1, 3, 5}) {
      const TokenIds ids = decode_greedy(m, z, len, allowed);
      REQUIRE(ids.size() == static_cast<std::size_t>(len));
      for (TokenId id : ids) CHECK(allowed[static_cast<std::size_t>(id)]);
    }
    Graph g;
    const Bound p(g, m.params, false);
    const auto samples = decode_soft(p, g.constant(z), 4, 0.5, rng, allowed);
    CHECK(samples.size() == 4);
    for (const auto& s : samples) {
      const Tensor& h = s.onehot.value();
      CHECK(h.sum() == 1.0);
      CHECK(allowed[static_cast<std::size_t>(argmax(h.row(0)))]);
    }
  }
}

TEST_CASE("trigger mask drops special tokens") {
  TokenMask all(10, true);
  const TokenMask m = trigger_mask(all);
  for (std::size_t i = 0; i < Vocab::kNumSpecial; ++i) CHECK_FALSE(m[i]);
  CHECK(m[4]);
  TokenMask specials(10, false);
  specials[0] = specials[3] = true;
  CHECK_THROWS(trigger_mask(specials));
}

TEST_CASE("soft one-hot triggers and id triggers give identical logits") {
  const Vocab& v = fx().vocab;
  const TokenIds trig = {v.id("the"), v.id("we"), v.id("food")};
  const std::vector<Example> batch(fx().dev.begin(), fx().dev.begin() + 5);
  for (const VictimArch arch : {VictimArch::kLstm2, VictimArch::kBag}) {
    CAPTURE(arch_name(arch));
    const VictimClassifier c = init_victim(v, arch, {8, 10, 12}, 2, 6);
    Graph g;
    const Bound p(g, c.params, false);
    std::vector<Var> rows;
    for (TokenId id : trig) rows.push_back(g.constant(onehot_row(id, v.size())));
    const Tensor soft = classify(c, p, rows, batch).value();
    const Tensor hard = classify(c, p, trig, batch).value();
    CHECK(relative_error(soft, hard) < 1e-12);

    // Prepending is the same as a longer benign text.
    std::vector<Example> joined = batch;
    for (auto& e : joined) e.text.insert(e.text.begin(), trig.begin(), trig.end());
    CHECK(relative_error(classify(c, p, TokenIds{}, joined).value(), hard) < 1e-12);
  }
}

TEST_CASE("pair model prepends the trigger to the hypothesis only") {
  const Split s = make_synthetic(Task::kNli, 2, {90, 30, 30});
  const Vocab v = build_vocab(s.train, 1);
  const std::vector<Example> batch = encode(v, s.dev);
  const VictimClassifier c = init_victim(v, VictimArch::kPair, {8, 10, 12}, 3, 1);
  const TokenIds trig = {v.id("a"), v.id("the")};
  std::vector<Example> joined = batch;
  for (auto& e : joined) e.text.insert(e.text.begin(), trig.begin(), trig.end());
  Graph g;
  const Bound p(g, c.params, false);
  const Tensor prepended = classify(c, p, trig, batch).value();
  const Tensor longer = classify(c, p, TokenIds{}, joined).value();
  CHECK(relative_error(prepended, longer) < 1e-12);
  CHECK(predict(c, trig, batch).size() == batch.size());

  const std::vector<Example> single = encode(fx().vocab, fx().split.dev);
  CHECK_THROWS(classify(c, p, TokenIds{}, std::span<const Example>(single).first(2)));
}

TEST_CASE("initialisation is seed-deterministic and float32-exact") {
  const ARAEModel a = init_arae(fx().vocab, fx().adims, 9);
  const ARAEModel b = init_arae(fx().vocab, fx().adims, 9);
  CHECK(a.params == b.params);
  for (const auto& [name, t] : a.params) {
    CAPTURE(name);
    CHECK(t == t.cast<float>().cast<double>());
  }
  CHECK(init_arae(fx().vocab, fx().adims, 10).params != a.params);
}

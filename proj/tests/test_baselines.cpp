// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/baselines.hpp"
#include "nuts/synthetic.hpp"

#include <doctest.h>

using namespace nuts;

namespace {

/// Objective sum_i w[pos_i][token_i]: separable, so the first-order score is exact.
TriggerObjective linear_objective(const Tensor& weights) {
  TriggerObjective obj;
  obj.soft = [weights](Graph& g, std::span<const Var> rows) {
    Var total = sum(rows[0] * g.constant(weights.row(0)));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      total = total + sum(rows[i] * g.constant(weights.row(static_cast<Index>(i))));
    }
    return total;
  };
  obj.hard = [weights](const TokenIds& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += weights(static_cast<Index>(i), t[i]);
    return s;
  };
  return obj;
}

}  // namespace

TEST_CASE("token-gradient search finds the optimum of a linear objective") {
  Rng rng(3);
  const Tensor w = standard_normal<double>(3, 12, rng);
  TokenMask mask(12, true);
  mask[0] = mask[5] = false;
  TokenGradientConfig cfg;
  cfg.beam_width = 2;
  cfg.top_k = 3;
  const TokenGradientSearch s = token_gradient_search(linear_objective(w), mask, 3, 1, cfg);
  TokenIds best(3);
  for (Index r = 0; r < 3; ++r) {
    double top = -1e300;
    for (Index v = 0; v < 12; ++v) {
      if (mask[static_cast<std::size_t>(v)] && w(r, v) > top) {
        top = w(r, v);
        best[static_cast<std::size_t>(r)] = static_cast<TokenId>(v);
      }
    }
  }
  CHECK(s.trigger == best);
  CHECK(s.initial_loss == doctest::Approx(w(0, 1) + w(1, 1) + w(2, 1)));
  CHECK(s.final_loss == doctest::Approx(linear_objective(w).hard(best)));
  CHECK(s.sweeps <= cfg.max_sweeps);
}

TEST_CASE("token-gradient never ends below its starting loss") {
  const Split split = make_synthetic(Task::kSentiment, 2, {200, 40, 40});
  const Vocab vocab = build_vocab(split.train, 1);
  std::vector<Example> pos;
  for (const auto& e : encode(vocab, split.dev)) {
    if (e.label == 1) pos.push_back(e);
  }
  TokenMask mask = trigger_mask(TokenMask(vocab.size(), true));
  for (std::uint64_t seed : {1u, 2u}) {
    const VictimClassifier v = init_victim(vocab, VictimArch::kBag, {6, 6, 6}, 2, seed);
    TokenGradientConfig cfg;
    cfg.max_sweeps = 2;
    const TokenGradientSearch s = token_gradient_search(victim_objective(v, pos, 1), mask, 2, vocab.id("the"), cfg);
    CHECK(s.final_loss >= s.initial_loss);
    for (TokenId id : s.trigger) CHECK(mask[static_cast<std::size_t>(id)]);
  }
}

TEST_CASE("baselines return NUTS-shaped records selected by m1") {
  const Split split = make_synthetic(Task::kSentiment, 4, {200, 40, 40});
  const Vocab vocab = build_vocab(split.train, 1);
  std::vector<Example> pos;
  for (const auto& e : encode(vocab, split.dev)) {
    if (e.label == 1) pos.push_back(e);
  }
  const ARAEModel arae = init_arae(vocab, {4, 6, 8, 6, 8, 8}, 1);
  const VictimClassifier victim = init_victim(vocab, VictimArch::kBag, {6, 6, 6}, 2, 1);
  const ScoringLM lm = init_lm(vocab, {6, 6}, 1);
  const AttackModels models = make_attack_models(arae, victim, lm, {});
  AttackConfig c;
  c.attacked_class = 1;
  c.n_inits = 6;
  c.threads = 1;
  TokenGradientConfig tg;
  tg.max_sweeps = 1;

  const AttackResult t = token_gradient_attack(models, pos, c, tg);
  REQUIRE(t.candidates.size() == 1);
  CHECK(t.selected.tokens.size() == 3);
  CHECK(t.selected.score == t.selected.m1);

  const AttackResult r = random_sequence_attack(models, pos, c);
  REQUIRE(r.candidates.size() == 6);
  for (const auto& cand : r.candidates) CHECK(r.selected.m1 <= cand.m1);
  CHECK(random_sequence_attack(models, pos, c).selected.tokens == r.selected.tokens);

  tg.filler = "zzz-not-a-word";
  CHECK_THROWS(token_gradient_attack(models, pos, c, tg));
}

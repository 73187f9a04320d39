// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/metrics.hpp"
#include "nuts/synthetic.hpp"
#include "nuts/trainers.hpp"

#include <doctest.h>

#include <algorithm>

using namespace nuts;

namespace {

TriggerCandidate cand(double m1, double m2) {
  TriggerCandidate c;
  c.m1 = m1;
  c.m2 = m2;
  return c;
}

/// Bag-of-embeddings victim whose logits are a constant bias.
VictimClassifier constant_victim(const Vocab& vocab, int predicted) {
  VictimClassifier v = init_victim(vocab, VictimArch::kBag, {8, 8, 8}, 2, 1);
  for (auto& [name, t] : v.params) t.setZero();
  v.params.at("head.b")(0, predicted) = 5.0;
  return v;
}

struct Toy {
  Split split = make_synthetic(Task::kSentiment, 3, {300, 80, 80});
  Vocab vocab = build_vocab(split.train, 1);
  std::vector<Example> dev = encode(vocab, split.dev);
  std::vector<Example> test = encode(vocab, split.test);
};

const Toy& toy() {
  static const Toy t;
  return t;
}

}  // namespace

TEST_CASE("candidate statistics reproduce analytic fixtures") {
  SUBCASE("perfect linearity") {
    const std::vector<TriggerCandidate> cs = {cand(1, 2), cand(2, 4), cand(3, 6)};
    const CandidateStats s = candidate_stats(cs);
    REQUIRE(s.pearson_m1_m2.has_value());
    CHECK(*s.pearson_m1_m2 == 1.0);
    CHECK(s.mean_m1 == 2.0);
    CHECK(s.mean_m2 == 4.0);
  }
  SUBCASE("symmetric pattern is uncorrelated") {
    const std::vector<TriggerCandidate> cs = {cand(1, 1), cand(2, 0), cand(3, 1)};
    CHECK(*candidate_stats(cs).pearson_m1_m2 == 0.0);
  }
  SUBCASE("population mean and std") {
    const std::vector<TriggerCandidate> cs = {cand(0.1, 1.0), cand(0.3, 1.0)};
    const CandidateStats s = candidate_stats(cs);
    CHECK(s.mean_m1 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.std_m1 == doctest::Approx(0.1).epsilon(1e-15));
    const std::vector<TriggerCandidate> dyadic = {cand(0.25, 1.0), cand(0.75, 3.0)};
    const CandidateStats d = candidate_stats(dyadic);
    CHECK(d.mean_m1 == 0.5);
    CHECK(d.std_m1 == 0.25);
    CHECK(d.std_m2 == 1.0);
  }
  SUBCASE("zero variance gives a flagged null") {
    const std::vector<TriggerCandidate> cs = {cand(0.1, 1.0), cand(0.3, 1.0)};
    const nlohmann::json j = to_json(candidate_stats(cs));
    CHECK(j.at("pearson_m1_m2").is_null());
    CHECK(j.at("pearson_defined") == false);
  }
  CHECK_THROWS_AS(candidate_stats(std::vector<TriggerCandidate>{cand(0, 0)}), ContractViolation);
}

TEST_CASE("pearson is bounded and invariant under positive affine maps") {
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(10), y(10), xs(10), ys(10);
    for (int i = 0; i < 10; ++i) {
      x[i] = n(rng);
      y[i] = 0.3 * x[i] + n(rng);
      xs[i] = 4.0 * x[i] - 7.0;
      ys[i] = 0.5 * y[i] + 2.0;
    }
    const double r = *pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(*pearson(xs, ys) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("word frequency and stat deltas") {
  const Vocab v({"a", "b"}, {10, 20});
  CHECK(avg_word_frequency({"a", "b"}, v) == 15.0);
  CHECK(avg_word_frequency({"zz", "qq"}, v) == 0.0);
  CHECK(avg_word_frequency({"a", "zz"}, v) == 5.0);
  CHECK(normalized_word_frequency({"a", "b"}, v) == 15.0 / 30.0);
  CHECK(stat_delta(5.0, 3.0) == 2.0);
  CHECK(stat_delta(4.0, 4.0) == 0.0);
  CHECK_THROWS_AS(avg_word_frequency({}, v), ContractViolation);
}

TEST_CASE("accuracy under trigger: stubs, identities, ordering") {
  const Toy& t = toy();
  const VictimClassifier always1 = constant_victim(t.vocab, 1);
  CHECK(accuracy_under_trigger(always1, t.dev, Tokens{"the", "food"}, 1) == 1.0);
  CHECK(accuracy_under_trigger(always1, t.dev, Tokens{}, 0) == 0.0);

  TrainConfig cfg;
  cfg.epochs = 2;
  const VictimClassifier bag =
      train_classifier(encode(t.vocab, t.split.train), t.dev, t.vocab, VictimArch::kBag, {16, 16, 16}, 2, cfg).model;
  const Tokens trig = {"we", "came", "back"};
  const double base = accuracy_under_trigger(bag, t.dev, trig, 0);
  CHECK(base >= 0.0);
  CHECK(base <= 1.0);
  std::vector<Example> shuffled = t.dev;
  std::shuffle(shuffled.begin(), shuffled.end(), Rng(11));
  CHECK(accuracy_under_trigger(bag, shuffled, trig, 0) == base);

  // Empty trigger equals clean accuracy on the class subset.
  std::vector<Example> negatives;
  for (const auto& e : t.dev) {
    if (e.label == 0) negatives.push_back(e);
  }
  CHECK(accuracy_under_trigger(bag, t.dev, Tokens{}, 0) == clean_accuracy(bag, negatives));

  std::vector<Example> only_pos;
  for (const auto& e : t.dev) {
    if (e.label == 1) only_pos.push_back(e);
  }
  CHECK_THROWS(accuracy_under_trigger(bag, only_pos, trig, 0));
}

TEST_CASE("transfer: identity target and empty trigger") {
  const Toy& t = toy();
  TrainConfig cfg;
  cfg.epochs = 2;
  const VictimClassifier bag =
      train_classifier(encode(t.vocab, t.split.train), t.dev, t.vocab, VictimArch::kBag, {16, 16, 16}, 2, cfg).model;
  const Tokens trig = {"nobody", "helped", "us"};
  const TransferResult same = transfer_eval(trig, bag, t.test, 1);
  CHECK(same.drop == accuracy_under_trigger(bag, t.test, Tokens{}, 1) - accuracy_under_trigger(bag, t.test, trig, 1));
  CHECK(transfer_eval({}, bag, t.test, 1).drop == 0.0);
  const TransferResult oov = transfer_eval({"zzyzx", "the"}, bag, t.test, 1);
  CHECK(oov.oov == std::vector<std::string>{"zzyzx"});
}

TEST_CASE("evaluation report is consistent with its parts") {
  const Toy& t = toy();
  TrainConfig cfg;
  cfg.epochs = 2;
  const VictimClassifier bag =
      train_classifier(encode(t.vocab, t.split.train), t.dev, t.vocab, VictimArch::kBag, {16, 16, 16}, 2, cfg).model;
  const ScoringLM lm = init_lm(t.vocab, {8, 8}, 1);
  const Tokens trig = {"we", "left", "early"};
  const EvalReport r = evaluate_trigger("sentiment", "nuts", trig, 1, bag, lm, t.vocab, t.dev, t.test);
  CHECK(r.test.attacked[1] == accuracy_under_trigger(bag, t.test, trig, 1));
  CHECK(r.dev.clean[0] == accuracy_under_trigger(bag, t.dev, Tokens{}, 0));
  CHECK(r.m2 == lm_avg_ce(lm, trig));
  CHECK(r.m2 == doctest::Approx(std::log(static_cast<double>(t.vocab.size()))));
  CHECK(r.word_frequency == avg_word_frequency(trig, t.vocab));
  for (const auto* f : {&r.dev, &r.test}) {
    for (double a : f->clean) CHECK((a >= 0.0 && a <= 1.0));
    for (double a : f->attacked) CHECK((a >= 0.0 && a <= 1.0));
  }
  const nlohmann::json j = to_json(r);
  CHECK(j.at("m1_test") == r.test.attacked[1]);
  CHECK(j.at("delta_lm_loss") == r.benign_m2 - r.m2);
  CHECK(to_text(r).find("we left early") != std::string::npos);
}

TEST_CASE("external grammar checker protocol") {
  const std::vector<int> counts = run_grammar_checker("awk '{print NF}'", {"a b c", "one", "x y"});
  CHECK(counts == std::vector<int>{3, 1, 2});
  CHECK_THROWS(run_grammar_checker("false", {"a"}));
  CHECK_THROWS(run_grammar_checker("echo nope", {"a"}));
  CHECK_THROWS(run_grammar_checker("echo 1", {"a", "b"}));
}

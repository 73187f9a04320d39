// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checks on the models trained by the pipeline fixture (NUTS_WORK), plus the
// pair classifier trained here.

#include "nuts/checkpoint.hpp"
#include "nuts/synthetic.hpp"
#include "nuts/trainers.hpp"
#include "nuts/workbench.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

using namespace nuts;
namespace fs = std::filesystem;

namespace {

struct Work {
  fs::path dir;
  RunConfig cfg;
  Corpus corpus;

  Work() {
    const char* w = std::getenv("NUTS_WORK");
    const char* c = std::getenv("NUTS_CONFIG");
    REQUIRE_MESSAGE((w && c), "NUTS_WORK and NUTS_CONFIG must be set");
    dir = w;
    cfg.merge_file(c);
    cfg.set("data.dir", (dir / cfg.str("data.dir")).string());
    corpus = load_corpus(cfg);
  }

  fs::path path(const std::string& key) const { return dir / cfg.str(key); }
};

const Work& work() {
  static const Work w;
  return w;
}

}  // namespace

TEST_CASE("ARAE reconstructs and generates in-grammar sentences") {
  const Work& w = work();
  const ARAEModel arae = load_arae(w.path("arae.path"));
  const double acc = reconstruction_accuracy(arae, text_sequences(w.corpus.train));
  MESSAGE("train reconstruction accuracy " << acc);
  CHECK(acc >= 0.80);

  Rng rng(2024);
  int in_grammar = 0;
  for (int i = 0; i < 100; ++i) {
    const Tensor z = generate(arae, standard_normal<double>(1, arae.dims.noise, rng));
    in_grammar += in_synthetic_grammar(w.corpus.task, arae.vocab.decode(decode_sentence(arae, z, 30))) ? 1 : 0;
  }
  MESSAGE("generated in grammar: " << in_grammar << "/100");
  CHECK(in_grammar >= 80);

  // Reconstruction loss falls epoch over epoch; one rise of at most 5% is tolerated.
  std::vector<double> losses;
  for (const auto& rec : read_jsonl(metrics_log_path(w.path("arae.path")))) {
    if (rec.contains("recon_loss")) losses.push_back(rec.at("recon_loss").get<double>());
  }
  REQUIRE(losses.size() >= 2);
  int rises = 0;
  for (std::size_t e = 1; e < losses.size(); ++e) {
    CAPTURE(e);
    if (losses[e] > losses[e - 1]) {
      ++rises;
      CHECK(losses[e] <= losses[e - 1] * 1.05);
    }
  }
  CHECK(rises <= 1);
}

TEST_CASE("victim classifiers are accurate on clean dev") {
  const Work& w = work();
  for (const std::string key : {"clf.path", "transfer.target"}) {
    CAPTURE(key);
    const VictimClassifier v = load_victim(w.path(key));
    Corpus c = w.corpus;
    encode_for(c, v.vocab);
    const double acc = clean_accuracy(v, c.dev);
    MESSAGE(arch_name(v.arch) << " clean dev accuracy " << acc);
    CHECK(acc >= 0.95);
  }
}

TEST_CASE("pair classifier learns the synthetic entailment task") {
  const Split s = make_synthetic(Task::kNli, 7, {3000, 300, 300});
  const Vocab vocab = build_vocab(s.train, 1);
  TrainConfig c;
  c.epochs = 6;
  c.seed = 13;
  const ClassifierTraining r =
      train_classifier(encode(vocab, s.train), encode(vocab, s.dev), vocab, VictimArch::kPair, {}, 3, c);
  MESSAGE("pair dev accuracy " << r.dev_accuracy);
  CHECK(r.dev_accuracy >= 0.85);
}

TEST_CASE("scoring LM beats uniform and prefers grammatical order") {
  const Work& w = work();
  const ScoringLM lm = load_lm(w.path("lm.path"));
  Corpus c = w.corpus;
  encode_for(c, lm.vocab);
  const double ce = lm_corpus_ce(lm, text_sequences(c.dev));
  const double uniform = std::log(static_cast<double>(lm.vocab.size()));
  MESSAGE("dev CE " << ce << " vs uniform " << uniform);
  CHECK(ce < uniform - 0.5);

  Rng rng(77);
  int preferred = 0, trials = 0;
  for (const auto& ex : w.corpus.raw.test) {
    if (trials == 100) break;
    Tokens shuffled = ex.text;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (shuffled == ex.text) continue;
    ++trials;
    preferred += lm_avg_ce(lm, ex.text) < lm_avg_ce(lm, shuffled) ? 1 : 0;
  }
  MESSAGE("grammatical preferred in " << preferred << "/" << trials);
  CHECK(trials == 100);
  CHECK(preferred >= 90);
}

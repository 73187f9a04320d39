// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_METRICS_HPP
#define NUTS_METRICS_HPP

#include "nuts/candidate.hpp"
#include "nuts/models.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nuts {

/// Victim-vocabulary ids for trigger words; unknown words become UNK and are
/// listed in `oov` when given.
TokenIds victim_ids(const VictimClassifier& victim, const Tokens& tokens, std::vector<std::string>* oov = nullptr);

/// Fraction of class-`y` examples classified as `y` with `trigger` prepended.
/// The result does not depend on the order of `dataset`.
double accuracy_under_trigger(const VictimClassifier& victim, std::span<const Example> dataset,
                              const TokenIds& trigger, int y);
double accuracy_under_trigger(const VictimClassifier& victim, std::span<const Example> dataset,
                              const Tokens& trigger, int y);

/// Mean victim cross-entropy against `y` over the class-`y` examples.
double loss_under_trigger(const VictimClassifier& victim, std::span<const Example> dataset, const TokenIds& trigger,
                          int y);

/// Mean training-corpus count of the tokens; OOV tokens count 0.
double avg_word_frequency(const Tokens& tokens, const Vocab& vocab);
/// Same, divided by the total corpus token count.
double normalized_word_frequency(const Tokens& tokens, const Vocab& vocab);

inline double stat_delta(double benign_stat, double trigger_stat) { return benign_stat - trigger_stat; }

/// Pearson correlation; empty when either series has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Population standard deviation.
double population_std(std::span<const double> x);

struct CandidateStats {
  std::size_t count = 0;
  double mean_m1 = 0.0;
  double std_m1 = 0.0;
  double mean_m2 = 0.0;
  double std_m2 = 0.0;
  std::optional<double> pearson_m1_m2;
};

CandidateStats candidate_stats(std::span<const TriggerCandidate> candidates);
nlohmann::json to_json(const CandidateStats& s);

struct TransferResult {
  double clean = 0.0;
  double attacked = 0.0;
  double drop = 0.0;
  std::vector<std::string> oov;
};

TransferResult transfer_eval(const Tokens& trigger, const VictimClassifier& target, std::span<const Example> dataset,
                             int y);

struct SplitFigures {
  std::vector<double> clean;     ///< per class
  std::vector<double> attacked;  ///< per class
};

struct EvalReport {
  std::string task;
  std::string attack_kind;
  Tokens trigger;
  int attacked_class = 0;
  SplitFigures dev;
  SplitFigures test;
  double m2 = 0.0;
  double word_frequency = 0.0;
  double word_frequency_normalized = 0.0;
  double benign_m2 = 0.0;
  double benign_word_frequency = 0.0;
  double benign_word_frequency_normalized = 0.0;
  std::optional<int> grammar_errors;
  std::optional<double> benign_grammar_errors;  ///< mean over the benign sentences

  double lm_delta() const { return stat_delta(benign_m2, m2); }
  double frequency_delta() const { return stat_delta(benign_word_frequency_normalized, word_frequency_normalized); }
};

/// Scores a trigger against dev and test. `vocab` supplies word frequencies
/// (the classifier training corpus).
EvalReport evaluate_trigger(const std::string& task, const std::string& attack_kind, const Tokens& trigger, int y,
                            const VictimClassifier& victim, const ScoringLM& lm, const Vocab& vocab,
                            std::span<const Example> dev, std::span<const Example> test);

nlohmann::json to_json(const EvalReport& r);
std::string to_text(const EvalReport& r);

/// Runs an external grammar checker: one sentence per line on its standard
/// input, one integer error count per line expected on its standard output.
std::vector<int> run_grammar_checker(const std::string& command, const std::vector<std::string>& sentences);

}  // namespace nuts

#endif  // NUTS_METRICS_HPP

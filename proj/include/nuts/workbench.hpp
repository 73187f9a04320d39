// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Glue between a RunConfig and the library: corpus loading, typed configs,
// and the on-disk outputs of each pipeline stage.

#ifndef NUTS_WORKBENCH_HPP
#define NUTS_WORKBENCH_HPP

#include "nuts/attack.hpp"
#include "nuts/baselines.hpp"
#include "nuts/config.hpp"
#include "nuts/synthetic.hpp"
#include "nuts/trainers.hpp"

#include <json.hpp>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace nuts {

/// The three splits of one task, encoded with the training-split vocabulary.
struct Corpus {
  Task task = Task::kSentiment;
  Split raw;
  Vocab vocab;
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

/// Writes <data.dir>/{train,dev,test}.tsv and lexicon.txt.
Split make_synth(const RunConfig& cfg);
Corpus load_corpus(const RunConfig& cfg);
/// Re-encodes dev and test with a model's own vocabulary.
void encode_for(Corpus& corpus, const Vocab& vocab);

/// Every text and premise of `examples`, as ARAE / LM training sequences.
std::vector<TokenIds> text_sequences(const std::vector<Example>& examples);
std::vector<Example> class_subset(const std::vector<Example>& examples, int y);

/// `section` is "arae", "clf" or "lm".
TrainConfig train_config(const RunConfig& cfg, const std::string& section);
AraeDims arae_dims(const RunConfig& cfg);
VictimDims victim_dims(const RunConfig& cfg);
LmDims lm_dims(const RunConfig& cfg);
AttackConfig attack_config(const RunConfig& cfg);
TokenGradientConfig token_gradient_config(const RunConfig& cfg);

/// Words kept out of trigger vocabularies: `lexicon`, else
/// <data.dir>/lexicon.txt when it exists, else nothing.
std::set<std::string> exclusion_lexicon(const RunConfig& cfg);

/// Checks every typed view of the config; throws ConfigError.
void validate_config(const RunConfig& cfg);

std::filesystem::path metrics_log_path(const std::filesystem::path& checkpoint);
std::filesystem::path candidates_path(const RunConfig& cfg, const std::string& kind);
std::filesystem::path selected_path(const RunConfig& cfg, const std::string& kind);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Candidate dump lines plus the selected-trigger record (with m1 on test).
nlohmann::json write_attack_outputs(const RunConfig& cfg, const std::string& kind, const AttackResult& result,
                                    const VictimClassifier& victim, const Corpus& corpus);

/// Candidates back from a dump (n_final is not stored).
std::vector<TriggerCandidate> read_candidates(const std::filesystem::path& path);

}  // namespace nuts

#endif  // NUTS_WORKBENCH_HPP

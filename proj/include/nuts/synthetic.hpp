// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Templated toy corpora standing in for a sentiment treebank and an
// entailment corpus. Both are produced by a small context-free grammar so the
// same grammar doubles as a membership oracle for generated text.

#ifndef NUTS_SYNTHETIC_HPP
#define NUTS_SYNTHETIC_HPP

#include "nuts/text.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace nuts {

enum class Task { kSentiment, kNli };

Task parse_task(const std::string& name);
std::string task_name(Task task);
int task_classes(Task task);

struct SizeSpec {
  std::size_t train = 3000;
  std::size_t dev = 400;
  std::size_t test = 400;
};

/// A context-free grammar over whitespace-separated symbols; symbols starting
/// with '$' are nonterminals.
class Grammar {
 public:
  /// Rules in the form "$A -> x $B y | z".
  explicit Grammar(const std::vector<std::string>& rules);

  Tokens expand(const std::string& symbol, Rng& rng) const;
  bool derives(const std::string& symbol, const Tokens& tokens) const;
  std::set<std::string> terminals() const;
  /// Terminals appearing directly in the productions of `symbol`.
  std::set<std::string> terminals(const std::string& symbol) const;

 private:
  using Production = std::vector<std::string>;
  std::map<std::string, std::vector<Production>> rules_;
};

/// Class-balanced, seed-deterministic split with no sentence repeated across
/// (or within) the three parts.
Split make_synthetic(Task task, std::uint64_t seed, const SizeSpec& sizes = {});

/// Lexicon of polarity words excluded from trigger vocabularies. Empty for NLI.
std::set<std::string> synthetic_lexicon(Task task);

/// True iff `tokens` is a complete sentence of the task grammar (for NLI:
/// either a premise or a hypothesis).
bool in_synthetic_grammar(Task task, const Tokens& tokens);

}  // namespace nuts

#endif  // NUTS_SYNTHETIC_HPP

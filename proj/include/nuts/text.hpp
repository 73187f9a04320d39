// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_TEXT_HPP
#define NUTS_TEXT_HPP

#include "nuts/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nuts {

using Tokens = std::vector<std::string>;

/// Lowercases, splits on whitespace and detaches ASCII punctuation.
Tokens tokenize(std::string_view text);
/// Joins tokens with single spaces.
std::string detokenize(const Tokens& tokens);

class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kNumSpecial = 4;

  /// Vocabulary holding only the special tokens.
  Vocab();
  /// Specials followed by `tokens` in the given order.
  Vocab(const std::vector<std::string>& tokens, const std::vector<std::size_t>& counts);

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  static bool is_special(TokenId id) { return id >= 0 && static_cast<std::size_t>(id) < kNumSpecial; }

  /// Training-corpus count of a token; 0 for out-of-vocabulary tokens.
  std::size_t frequency(std::string_view token) const;
  std::size_t frequency(TokenId id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t total_count() const { return total_; }

  TokenIds encode(const Tokens& tokens) const;
  Tokens decode(const TokenIds& ids) const;

  /// Regular (non-special) tokens in id order.
  std::vector<std::string> regular_tokens() const;
  std::vector<std::size_t> regular_counts() const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.id_to_token_ == b.id_to_token_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

/// A labeled example as read from disk, before encoding.
struct RawExample {
  int label = 0;
  Tokens text;
  Tokens premise;  // empty for single-text tasks

  bool is_pair() const { return !premise.empty(); }
  friend bool operator==(const RawExample&, const RawExample&) = default;
};

/// A labeled example in token ids.
struct Example {
  int label = 0;
  TokenIds text;
  TokenIds premise;

  bool is_pair() const { return !premise.empty(); }
};

struct Split {
  std::vector<RawExample> train;
  std::vector<RawExample> dev;
  std::vector<RawExample> test;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keeps every token seen at least `min_freq` times; ids are assigned by
/// descending count, then lexicographically.
Vocab build_vocab(const std::vector<RawExample>& corpus, std::size_t min_freq);

/// Generator-vocabulary mask of tokens shared with the classifier vocabulary,
/// minus `exclusion` and special tokens.
TokenMask intersect_vocab(const Vocab& classifier_vocab, const Vocab& generator_vocab,
                          const std::set<std::string>& exclusion);

/// Generator id -> classifier id, UNK where the classifier lacks the token.
TokenIds bridge_vocab(const Vocab& from, const Vocab& to);

Example encode(const Vocab& vocab, const RawExample& raw);
std::vector<Example> encode(const Vocab& vocab, const std::vector<RawExample>& raws);

/// Examples whose label equals `label`.
std::vector<RawExample> filter_label(const std::vector<RawExample>& examples, int label);
int num_classes(const std::vector<RawExample>& examples);

/// `<label>\t<text>` or `<label>\t<premise>\t<hypothesis>` per line.
std::vector<RawExample> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<RawExample>& examples);

/// One token per line, `#` starts a comment.
std::set<std::string> read_lexicon(const std::filesystem::path& path);
void write_lexicon(const std::filesystem::path& path, const std::set<std::string>& words);

}  // namespace nuts

#endif  // NUTS_TEXT_HPP

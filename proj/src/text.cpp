// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace nuts {

namespace {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> tokens{"<pad>", "<unk>", "<bos>", "<eos>"};
  return tokens;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && c != '\'' && c != '-') {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

std::string detokenize(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

Vocab::Vocab() : Vocab({}, {}) {}

Vocab::Vocab(const std::vector<std::string>& tokens, const std::vector<std::size_t>& counts) {
  require(tokens.size() == counts.size(), "Vocab: one count per token required");
  for (const auto& s : special_tokens()) {
    token_to_id_.emplace(s, static_cast<TokenId>(id_to_token_.size()));
    id_to_token_.push_back(s);
    counts_.push_back(0);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    require(!tokens[i].empty(), "Vocab: empty token");
    const bool inserted = token_to_id_.emplace(tokens[i], static_cast<TokenId>(id_to_token_.size())).second;
    require(inserted, "Vocab: duplicate token '" + tokens[i] + "'");
    id_to_token_.push_back(tokens[i]);
    counts_.push_back(counts[i]);
    total_ += counts[i];
  }
}

TokenId Vocab::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return token_to_id_.count(std::string(token)) != 0; }

std::size_t Vocab::frequency(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? 0 : counts_[static_cast<std::size_t>(it->second)];
}

TokenIds Vocab::encode(const Tokens& tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocab::decode(const TokenIds& ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

std::vector<std::string> Vocab::regular_tokens() const {
  return {id_to_token_.begin() + kNumSpecial, id_to_token_.end()};
}

std::vector<std::size_t> Vocab::regular_counts() const { return {counts_.begin() + kNumSpecial, counts_.end()}; }

// ---------------------------------------------------------------------------

Vocab build_vocab(const std::vector<RawExample>& corpus, std::size_t min_freq) {
  require(min_freq >= 1, "build_vocab: min_freq must be >= 1");
  if (corpus.empty()) throw CorpusError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : corpus) {
    for (const auto& t : ex.premise) ++counts[t];
    for (const auto& t : ex.text) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    const bool special = std::find(special_tokens().begin(), special_tokens().end(), tok) != special_tokens().end();
    if (n >= min_freq && !special) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  std::vector<std::size_t> freq;
  for (auto& [tok, n] : kept) {
    tokens.push_back(tok);
    freq.push_back(n);
  }
  return Vocab(tokens, freq);
}

TokenMask intersect_vocab(const Vocab& classifier_vocab, const Vocab& generator_vocab,
                          const std::set<std::string>& exclusion) {
  TokenMask mask(generator_vocab.size(), false);
  bool any = false;
  for (std::size_t i = Vocab::kNumSpecial; i < generator_vocab.size(); ++i) {
    const std::string& tok = generator_vocab.token(static_cast<TokenId>(i));
    if (classifier_vocab.contains(tok) && !exclusion.count(tok)) {
      mask[i] = true;
      any = true;
    }
  }
  if (!any) throw CorpusError("intersect_vocab: no legal trigger words remain");
  return mask;
}

TokenIds bridge_vocab(const Vocab& from, const Vocab& to) {
  TokenIds map(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    map[i] = Vocab::is_special(static_cast<TokenId>(i)) ? static_cast<TokenId>(i) : to.id(from.token(static_cast<TokenId>(i)));
  }
  return map;
}

Example encode(const Vocab& vocab, const RawExample& raw) {
  return Example{raw.label, vocab.encode(raw.text), vocab.encode(raw.premise)};
}

std::vector<Example> encode(const Vocab& vocab, const std::vector<RawExample>& raws) {
  std::vector<Example> out;
  out.reserve(raws.size());
  for (const auto& r : raws) out.push_back(encode(vocab, r));
  return out;
}

std::vector<RawExample> filter_label(const std::vector<RawExample>& examples, int label) {
  std::vector<RawExample> out;
  std::copy_if(examples.begin(), examples.end(), std::back_inserter(out),
               [label](const RawExample& e) { return e.label == label; });
  return out;
}

int num_classes(const std::vector<RawExample>& examples) {
  int top = -1;
  for (const auto& e : examples) top = std::max(top, e.label);
  return top + 1;
}

std::vector<RawExample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus " + path.string());
  std::vector<RawExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 2 && fields.size() != 3) throw CorpusError(where + ": expected 2 or 3 tab-separated fields");
    RawExample ex;
    try {
      std::size_t used = 0;
      ex.label = std::stoi(fields[0], &used);
      if (used != trim(fields[0]).size() || ex.label < 0) throw std::invalid_argument("label");
    } catch (const std::exception&) {
      throw CorpusError(where + ": label must be a non-negative integer");
    }
    if (fields.size() == 3) ex.premise = tokenize(fields[1]);
    ex.text = tokenize(fields.back());
    if (ex.text.empty() || (fields.size() == 3 && ex.premise.empty())) throw CorpusError(where + ": empty text");
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw CorpusError("corpus " + path.string() + " has no examples");
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<RawExample>& examples) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus " + path.string());
  for (const auto& e : examples) {
    out << e.label << '\t';
    if (e.is_pair()) out << detokenize(e.premise) << '\t';
    out << detokenize(e.text) << '\n';
  }
}

std::set<std::string> read_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open lexicon " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string word = trim(line);
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!word.empty()) words.insert(word);
  }
  return words;
}

void write_lexicon(const std::filesystem::path& path, const std::set<std::string>& words) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write lexicon " + path.string());
  out << "# sentiment lexicon, one lowercase token per line\n";
  for (const auto& w : words) out << w << '\n';
}

}  // namespace nuts

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unistd.h>

namespace nuts {

namespace {

/// Class-y examples in a canonical order, so batched evaluation is
/// independent of how the caller ordered the dataset.
std::vector<Example> class_subset(std::span<const Example> dataset, int y) {
  std::vector<Example> out;
  for (const auto& ex : dataset) {
    if (ex.label == y) out.push_back(ex);
  }
  require(!out.empty(), "no examples of class " + std::to_string(y) + " in the dataset");
  std::sort(out.begin(), out.end(), [](const Example& a, const Example& b) {
    return std::tie(a.premise, a.text) < std::tie(b.premise, b.text);
  });
  return out;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

TokenIds victim_ids(const VictimClassifier& victim, const Tokens& tokens, std::vector<std::string>* oov) {
  TokenIds ids;
  for (const auto& t : tokens) {
    if (!victim.vocab.contains(t) && oov) oov->push_back(t);
    ids.push_back(victim.vocab.id(t));
  }
  return ids;
}

double accuracy_under_trigger(const VictimClassifier& victim, std::span<const Example> dataset,
                              const TokenIds& trigger, int y) {
  const std::vector<Example> subset = class_subset(dataset, y);
  const std::vector<int> pred = predict(victim, trigger, subset);
  const auto hits = std::count(pred.begin(), pred.end(), y);
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

double accuracy_under_trigger(const VictimClassifier& victim, std::span<const Example> dataset, const Tokens& trigger,
                              int y) {
  return accuracy_under_trigger(victim, dataset, victim_ids(victim, trigger), y);
}

double loss_under_trigger(const VictimClassifier& victim, std::span<const Example> dataset, const TokenIds& trigger,
                          int y) {
  constexpr std::size_t kChunk = 64;
  const std::vector<Example> subset = class_subset(dataset, y);
  const std::span<const Example> all(subset);
  double total = 0.0;
  for (std::size_t start = 0; start < subset.size(); start += kChunk) {
    const auto chunk = all.subspan(start, std::min(kChunk, subset.size() - start));
    Graph g;
    const Bound p(g, victim.params, false);
    const std::vector<int> targets(chunk.size(), y);
    total += cross_entropy(classify(victim, p, trigger, chunk), targets).item() * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(subset.size());
}

double avg_word_frequency(const Tokens& tokens, const Vocab& vocab) {
  require(!tokens.empty(), "avg_word_frequency: needs at least one token");
  double sum = 0.0;
  for (const auto& t : tokens) sum += static_cast<double>(vocab.frequency(t));
  return sum / static_cast<double>(tokens.size());
}

double normalized_word_frequency(const Tokens& tokens, const Vocab& vocab) {
  require(vocab.total_count() > 0, "normalized_word_frequency: vocabulary has no counts");
  return avg_word_frequency(tokens, vocab) / static_cast<double>(vocab.total_count());
}

double population_std(std::span<const double> x) {
  require(!x.empty(), "population_std: empty series");
  const double m = mean_of(x);
  double sq = 0.0;
  for (double v : x) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(x.size()));
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson: series lengths differ");
  require(x.size() >= 2, "pearson: needs at least two pairs");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CandidateStats candidate_stats(std::span<const TriggerCandidate> candidates) {
  require(candidates.size() >= 2, "candidate_stats: needs at least two candidates");
  std::vector<double> m1, m2;
  for (const auto& c : candidates) {
    m1.push_back(c.m1);
    m2.push_back(c.m2);
  }
  return {candidates.size(), mean_of(m1), population_std(m1), mean_of(m2), population_std(m2), pearson(m1, m2)};
}

nlohmann::json to_json(const CandidateStats& s) {
  nlohmann::json j = {{"count", s.count},     {"mean_m1", s.mean_m1}, {"std_m1", s.std_m1},
                      {"mean_m2", s.mean_m2}, {"std_m2", s.std_m2}};
  j["pearson_m1_m2"] = s.pearson_m1_m2 ? nlohmann::json(*s.pearson_m1_m2) : nlohmann::json(nullptr);
  j["pearson_defined"] = s.pearson_m1_m2.has_value();
  return j;
}

TransferResult transfer_eval(const Tokens& trigger, const VictimClassifier& target, std::span<const Example> dataset,
                             int y) {
  TransferResult r;
  const TokenIds ids = victim_ids(target, trigger, &r.oov);
  r.clean = accuracy_under_trigger(target, dataset, TokenIds{}, y);
  r.attacked = accuracy_under_trigger(target, dataset, ids, y);
  r.drop = r.clean - r.attacked;
  return r;
}

namespace {

SplitFigures split_figures(const VictimClassifier& victim, std::span<const Example> data, const TokenIds& trigger) {
  SplitFigures f;
  for (int c = 0; c < victim.classes; ++c) {
    const bool present = std::any_of(data.begin(), data.end(), [c](const Example& e) { return e.label == c; });
    f.clean.push_back(present ? accuracy_under_trigger(victim, data, TokenIds{}, c) : 0.0);
    f.attacked.push_back(present ? accuracy_under_trigger(victim, data, trigger, c) : 0.0);
  }
  return f;
}

}  // namespace

EvalReport evaluate_trigger(const std::string& task, const std::string& attack_kind, const Tokens& trigger, int y,
                            const VictimClassifier& victim, const ScoringLM& lm, const Vocab& vocab,
                            std::span<const Example> dev, std::span<const Example> test) {
  require(!trigger.empty(), "evaluate: empty trigger");
  EvalReport r;
  r.task = task;
  r.attack_kind = attack_kind;
  r.trigger = trigger;
  r.attacked_class = y;
  const TokenIds ids = victim_ids(victim, trigger);
  r.dev = split_figures(victim, dev, ids);
  r.test = split_figures(victim, test, ids);
  r.m2 = lm_avg_ce(lm, trigger);
  r.word_frequency = avg_word_frequency(trigger, vocab);
  r.word_frequency_normalized = normalized_word_frequency(trigger, vocab);

  std::vector<double> ce, freq;
  for (const auto& ex : test) {
    if (ex.label != y) continue;
    const Tokens words = victim.vocab.decode(ex.text);
    ce.push_back(lm_avg_ce(lm, words));
    freq.push_back(avg_word_frequency(words, vocab));
  }
  require(!ce.empty(), "evaluate: no test examples of the attacked class");
  r.benign_m2 = mean_of(ce);
  r.benign_word_frequency = mean_of(freq);
  r.benign_word_frequency_normalized = r.benign_word_frequency / static_cast<double>(vocab.total_count());
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  const auto figures = [](const SplitFigures& f) {
    return nlohmann::json{{"clean_accuracy", f.clean}, {"attacked_accuracy", f.attacked}};
  };
  nlohmann::json j = {{"task", r.task},
                      {"attack_kind", r.attack_kind},
                      {"trigger", r.trigger},
                      {"attacked_class", r.attacked_class},
                      {"dev", figures(r.dev)},
                      {"test", figures(r.test)},
                      {"m1_dev", r.dev.attacked.at(static_cast<std::size_t>(r.attacked_class))},
                      {"m1_test", r.test.attacked.at(static_cast<std::size_t>(r.attacked_class))},
                      {"m2", r.m2},
                      {"word_frequency", r.word_frequency},
                      {"word_frequency_normalized", r.word_frequency_normalized},
                      {"benign_m2", r.benign_m2},
                      {"benign_word_frequency", r.benign_word_frequency},
                      {"benign_word_frequency_normalized", r.benign_word_frequency_normalized},
                      {"delta_lm_loss", r.lm_delta()},
                      {"delta_word_frequency_normalized", r.frequency_delta()}};
  if (r.grammar_errors) j["grammar_errors"] = *r.grammar_errors;
  if (r.benign_grammar_errors) j["benign_grammar_errors"] = *r.benign_grammar_errors;
  return j;
}

std::string to_text(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "task            " << r.task << "\n"
     << "attack          " << r.attack_kind << "\n"
     << "trigger         " << detokenize(r.trigger) << "\n"
     << "attacked class  " << r.attacked_class << "\n\n";
  os << "class  clean(dev)  attacked(dev)  clean(test)  attacked(test)\n";
  for (std::size_t c = 0; c < r.dev.clean.size(); ++c) {
    os << std::setw(5) << c << "  " << std::setw(10) << r.dev.clean[c] << "  " << std::setw(13) << r.dev.attacked[c]
       << "  " << std::setw(11) << r.test.clean[c] << "  " << std::setw(14) << r.test.attacked[c] << "\n";
  }
  os << "\nmetric                       trigger      benign       delta\n";
  os << "lm loss (nats/token)     " << std::setw(11) << r.m2 << "  " << std::setw(10) << r.benign_m2 << "  "
     << std::setw(10) << r.lm_delta() << "\n";
  os << "word frequency (norm.)   " << std::setw(11) << r.word_frequency_normalized << "  " << std::setw(10)
     << r.benign_word_frequency_normalized << "  " << std::setw(10) << r.frequency_delta() << "\n";
  os << "word frequency (count)   " << std::setw(11) << r.word_frequency << "  " << std::setw(10)
     << r.benign_word_frequency << "\n";
  if (r.grammar_errors) {
    os << "grammar errors           " << std::setw(11) << *r.grammar_errors << "  " << std::setw(10)
       << r.benign_grammar_errors.value_or(0) << "\n";
  }
  return os.str();
}

std::vector<int> run_grammar_checker(const std::string& command, const std::vector<std::string>& sentences) {
  require(!command.empty(), "grammar checker: empty command");
  char path[] = "/tmp/nuts-grammar-XXXXXX";
  const int fd = mkstemp(path);
  if (fd < 0) throw std::runtime_error("grammar checker: cannot create a temporary file");
  close(fd);
  {
    std::ofstream in(path);
    for (const auto& s : sentences) in << s << "\n";
  }
  const std::string cmd = command + " < '" + path + "'";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    std::remove(path);
    throw std::runtime_error("grammar checker: cannot start '" + command + "'");
  }
  std::string output;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  const int status = pclose(pipe);
  std::remove(path);
  if (status != 0) throw std::runtime_error("grammar checker exited with status " + std::to_string(status));
  std::vector<int> counts;
  std::istringstream lines(output);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(line, &used);
      if (used != line.size() || v < 0) throw std::invalid_argument(line);
      counts.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("grammar checker: expected a nonnegative integer per line, got '" + line + "'");
    }
  }
  if (counts.size() != sentences.size()) {
    throw std::runtime_error("grammar checker: expected " + std::to_string(sentences.size()) + " counts, got " +
                             std::to_string(counts.size()));
  }
  return counts;
}

}  // namespace nuts

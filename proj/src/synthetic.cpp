// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/synthetic.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace nuts {

Task parse_task(const std::string& name) {
  if (name == "sentiment") return Task::kSentiment;
  if (name == "nli") return Task::kNli;
  throw ContractViolation("unknown task '" + name + "' (expected sentiment|nli)");
}

std::string task_name(Task task) { return task == Task::kSentiment ? "sentiment" : "nli"; }

int task_classes(Task task) { return task == Task::kSentiment ? 2 : 3; }

// ---------------------------------------------------------------------------

Grammar::Grammar(const std::vector<std::string>& rules) {
  for (const auto& rule : rules) {
    const auto arrow = rule.find("->");
    require(arrow != std::string::npos, "Grammar: rule without '->': " + rule);
    std::istringstream head(rule.substr(0, arrow));
    std::string lhs;
    head >> lhs;
    require(!lhs.empty() && lhs[0] == '$', "Grammar: left-hand side must be a nonterminal");
    std::istringstream body(rule.substr(arrow + 2));
    Production current;
    std::string sym;
    auto& alts = rules_[lhs];
    while (body >> sym) {
      if (sym == "|") {
        alts.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(sym);
      }
    }
    alts.push_back(std::move(current));
  }
  for (const auto& [lhs, alts] : rules_) {
    for (const auto& alt : alts) {
      require(!alt.empty(), "Grammar: empty production for " + lhs);
      for (const auto& s : alt) {
        require(s[0] != '$' || rules_.count(s), "Grammar: undefined nonterminal " + s);
      }
    }
  }
}

Tokens Grammar::expand(const std::string& symbol, Rng& rng) const {
  if (symbol[0] != '$') return {symbol};
  const auto& alts = rules_.at(symbol);
  std::uniform_int_distribution<std::size_t> pick(0, alts.size() - 1);
  Tokens out;
  for (const auto& s : alts[pick(rng)]) {
    Tokens part = expand(s, rng);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

bool Grammar::derives(const std::string& symbol, const Tokens& tokens) const {
  // ends(symbol, start) = set of positions where a derivation of symbol from
  // `start` can end, memoized per (symbol, start).
  std::map<std::pair<std::string, std::size_t>, std::set<std::size_t>> memo;
  std::function<const std::set<std::size_t>&(const std::string&, std::size_t)> ends =
      [&](const std::string& sym, std::size_t start) -> const std::set<std::size_t>& {
    const auto key = std::make_pair(sym, start);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::set<std::size_t> result;
    if (sym[0] != '$') {
      if (start < tokens.size() && tokens[start] == sym) result.insert(start + 1);
    } else {
      memo[key];  // grammar is not left-recursive; guards against cycles anyway
      for (const auto& alt : rules_.at(sym)) {
        std::set<std::size_t> frontier{start};
        for (const auto& s : alt) {
          std::set<std::size_t> next;
          for (std::size_t p : frontier) {
            const auto& e = ends(s, p);
            next.insert(e.begin(), e.end());
          }
          frontier = std::move(next);
          if (frontier.empty()) break;
        }
        result.insert(frontier.begin(), frontier.end());
      }
    }
    return memo[key] = std::move(result);
  };
  return ends(symbol, 0).count(tokens.size()) != 0;
}

std::set<std::string> Grammar::terminals() const {
  std::set<std::string> out;
  for (const auto& [lhs, alts] : rules_) {
    const auto t = terminals(lhs);
    out.insert(t.begin(), t.end());
  }
  return out;
}

std::set<std::string> Grammar::terminals(const std::string& symbol) const {
  std::set<std::string> out;
  for (const auto& alt : rules_.at(symbol)) {
    for (const auto& s : alt) {
      if (s[0] != '$') out.insert(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const Grammar& sentiment_grammar() {
  static const Grammar g({
      "$NOUN -> food | service | staff | room | movie | plot | music | view | menu | waiter | hotel | show | "
      "pizza | pasta | soup | wine | lobby | pool | bed | screen | story | cast | script | sound | breakfast | "
      "lunch | dinner | concert | tour | bar | garden | manager | kitchen | salad | band",
      "$POSADJ -> great | excellent | wonderful | delicious | friendly | amazing | perfect | lovely | superb | "
      "fantastic | pleasant | charming | brilliant | enjoyable | impressive",
      "$NEGADJ -> terrible | awful | horrible | rude | bland | boring | dirty | disappointing | poor | bad | "
      "mediocre | dreadful | stale | annoying | unpleasant",
      "$POSVERB -> loved | enjoyed | liked | adored | appreciated",
      "$NEGVERB -> hated | disliked | regretted | despised",
      "$INTENS -> really | very | quite | truly | rather | so",
      "$WHEN -> soon | tomorrow | again | next week | next month",
      "$EXTRA -> free | extra",
      "$ITEM -> dessert | drinks | bread | coffee | tickets | snacks",
      "$LATE -> midnight | closing | sunrise | the end",
      "$MORE -> seconds | more | another round",
      "$VISIT -> visit | stay | table | trip",
      "$REL -> wife | husband | son | daughter | friend | mother | father | sister | brother",
      "$DUR -> hours | forever | ages | an hour",
      "$SPOT -> table | room | door",
      "$BOOKING -> order | reservation | luggage | tickets",
      "$TWICE -> twice | extra | double",
      "$DAY -> monday | tuesday | wednesday | thursday | friday | saturday | sunday",
      "$WEATHER -> windy | cloudy | warm | humid | cold | dark",
      "$PLACE -> station | park | market | airport | museum | square | harbor | bridge | library | river | "
      "church | school",
      "$TIME -> noon | six | seven | eight | nine | dawn",
      "$PERIOD -> year | month | spring | summer | winter",
      "$EXP_POS -> the $NOUN was $POSADJ | the $NOUN was $INTENS $POSADJ | i $POSVERB the $NOUN | "
      "we $POSVERB the $NOUN",
      "$EXP_NEG -> the $NOUN was $NEGADJ | the $NOUN was $INTENS $NEGADJ | i $NEGVERB the $NOUN | "
      "we $NEGVERB the $NOUN",
      "$IMP_POS -> we will come back $WHEN | they gave us $EXTRA $ITEM | we stayed until $LATE | "
      "my $REL wants to return $WHEN | everyone asked for $MORE | we booked another $VISIT | "
      "my $REL asked for the recipe | we told everyone about it | we came back | they remembered us | "
      "we tipped generously | we stayed longer",
      "$IMP_NEG -> we waited $DUR for the $NOUN | nobody came to our $SPOT | they lost our $BOOKING | "
      "we asked for a refund | we left before the $NOUN | my $REL got sick after the $NOUN | "
      "they charged us $TWICE | we never got our $ITEM | nobody helped us | we got sick | they ignored us | "
      "we complained twice",
      "$NEUTRAL -> we went there on $DAY | it was $WEATHER outside | the $NOUN is near the $PLACE | "
      "i went with my $REL | we arrived at $TIME | the $NOUN opened last $PERIOD",
      "$POS_CL -> $EXP_POS | $IMP_POS",
      "$NEG_CL -> $EXP_NEG | $IMP_NEG",
      // Alternatives are drawn uniformly; repeats set the mixture weights.
      // A single complaint makes a review negative.
      "$POS_SENT -> $POS_CL | $POS_CL | $POS_CL | $NEUTRAL and $POS_CL | $POS_CL and $NEUTRAL | "
      "$NEUTRAL but $POS_CL | $POS_CL and $POS_CL | $POS_CL and $POS_CL",
      "$NEG_SENT -> $NEG_CL | $NEG_CL | $NEG_CL | $NEUTRAL and $NEG_CL | $NEG_CL and $NEUTRAL | "
      "$NEUTRAL but $NEG_CL | $NEG_CL and $NEG_CL | $POS_CL but $NEG_CL | $NEG_CL but $POS_CL | "
      "$POS_CL and $NEG_CL | $NEG_CL and $POS_CL",
      "$SENT -> $POS_SENT | $NEG_SENT",
  });
  return g;
}

const Grammar& nli_grammar() {
  static const Grammar g({
      "$SUBJ -> man | woman | boy | girl | child | chef | farmer | student | doctor | dancer",
      "$ACT -> playing guitar | reading a book | cooking dinner | riding a bike | painting a fence | "
      "kicking a ball | eating an apple | washing a car | writing a letter | climbing a tree",
      "$PLACE -> park | beach | kitchen | street | garden | library | office | field | station | market",
      "$PURPOSE -> money | fun | a contest | a friend | charity",
      "$ATTR -> tall | famous | young | tired | married",
      "$COMP -> friend | brother | sister | teacher",
      "$PREMISE -> a $SUBJ is $ACT in the $PLACE",
      "$HYP -> a person is $ACT | a $SUBJ is in the $PLACE | someone is $ACT in the $PLACE | a $SUBJ is $ACT | "
      "a $SUBJ is $ACT for $PURPOSE | the $SUBJ is $ATTR | a $SUBJ is $ACT with a $COMP | a $SUBJ is sleeping | "
      "nobody is in the $PLACE",
      "$SENT -> $PREMISE | $HYP",
  });
  return g;
}

Tokens concat(std::initializer_list<Tokens> parts) {
  Tokens out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Tokens words(const std::string& s) { return tokenize(s); }

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

RawExample nli_example(int label, Rng& rng) {
  const Grammar& g = nli_grammar();
  const Tokens subj = g.expand("$SUBJ", rng);
  const Tokens act = g.expand("$ACT", rng);
  const Tokens place = g.expand("$PLACE", rng);
  RawExample ex;
  ex.label = label;
  ex.premise = concat({words("a"), subj, words("is"), act, words("in the"), place});
  std::uniform_int_distribution<int> form(0, label == 1 ? 2 : 3);
  switch (label) {
    case 0:  // entailment
      switch (form(rng)) {
        case 0: ex.text = concat({words("a person is"), act}); break;
        case 1: ex.text = concat({words("a"), subj, words("is in the"), place}); break;
        case 2: ex.text = concat({words("someone is"), act, words("in the"), place}); break;
        default: ex.text = concat({words("a"), subj, words("is"), act}); break;
      }
      break;
    case 1:  // neutral
      switch (form(rng)) {
        case 0: ex.text = concat({words("a"), subj, words("is"), act, words("for"), g.expand("$PURPOSE", rng)}); break;
        case 1: ex.text = concat({words("the"), subj, words("is"), g.expand("$ATTR", rng)}); break;
        default: ex.text = concat({words("a"), subj, words("is"), act, words("with a"), g.expand("$COMP", rng)}); break;
      }
      break;
    default: {  // contradiction
      switch (form(rng)) {
        case 0: ex.text = concat({words("a"), subj, words("is sleeping")}); break;
        case 1: ex.text = concat({words("nobody is in the"), place}); break;
        case 2: {
          Tokens other = place;
          while (other == place) other = g.expand("$PLACE", rng);
          ex.text = concat({words("a"), subj, words("is in the"), other});
          break;
        }
        default: {
          Tokens other = act;
          while (other == act) other = g.expand("$ACT", rng);
          ex.text = concat({words("a"), subj, words("is"), other});
          break;
        }
      }
    }
  }
  return ex;
}

RawExample sentiment_example(int label, Rng& rng) {
  RawExample ex;
  ex.label = label;
  ex.text = sentiment_grammar().expand(label == 1 ? "$POS_SENT" : "$NEG_SENT", rng);
  return ex;
}

}  // namespace

Split make_synthetic(Task task, std::uint64_t seed, const SizeSpec& sizes) {
  Rng rng(seed);
  const int classes = task_classes(task);
  std::set<std::pair<Tokens, Tokens>> seen;
  auto draw = [&](std::size_t count) {
    std::vector<RawExample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
      for (int attempt = 0;; ++attempt) {
        RawExample ex = task == Task::kSentiment ? sentiment_example(label, rng) : nli_example(label, rng);
        if (seen.emplace(ex.premise, ex.text).second) {
          out.push_back(std::move(ex));
          break;
        }
        require(attempt < 100000, "make_synthetic: grammar exhausted; requested split too large");
      }
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  };
  Split split;
  split.train = draw(sizes.train);
  split.dev = draw(sizes.dev);
  split.test = draw(sizes.test);
  return split;
}

std::set<std::string> synthetic_lexicon(Task task) {
  if (task != Task::kSentiment) return {};
  std::set<std::string> out;
  for (const char* sym : {"$POSADJ", "$NEGADJ", "$POSVERB", "$NEGVERB"}) {
    const auto w = sentiment_grammar().terminals(sym);
    out.insert(w.begin(), w.end());
  }
  return out;
}

bool in_synthetic_grammar(Task task, const Tokens& tokens) {
  return (task == Task::kSentiment ? sentiment_grammar() : nli_grammar()).derives("$SENT", tokens);
}

}  // namespace nuts

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/baselines.hpp"

#include "nuts/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace nuts {

TriggerObjective victim_objective(const VictimClassifier& victim, std::span<const Example> dev_subset, int y) {
  require(!dev_subset.empty(), "token-gradient: empty dev subset");
  TriggerObjective obj;
  obj.soft = [&victim, dev_subset, y](Graph& g, std::span<const Var> rows) {
    const Bound p(g, victim.params, false);
    const std::vector<int> targets(dev_subset.size(), y);
    return cross_entropy(classify(victim, p, rows, dev_subset), targets);
  };
  obj.hard = [&victim, dev_subset, y](const TokenIds& trigger) {
    return loss_under_trigger(victim, dev_subset, trigger, y);
  };
  return obj;
}

namespace {

struct Beam {
  TokenIds trigger;
  double loss = 0.0;
};

bool beam_before(const Beam& a, const Beam& b) {
  if (a.loss != b.loss) return a.loss > b.loss;
  return a.trigger < b.trigger;
}

/// Gradient of the soft objective with respect to the one-hot row at `pos`.
Tensor position_gradient(const TriggerObjective& objective, const TokenIds& trigger, std::size_t pos, Index vocab) {
  Graph g;
  std::vector<Var> rows;
  for (TokenId id : trigger) {
    Tensor onehot = Tensor::Zero(1, vocab);
    onehot(0, id) = 1.0;
    rows.push_back(g.variable(std::move(onehot)));
  }
  return g.backward(objective.soft(g, rows)).of(rows[pos]);
}

}  // namespace

TokenGradientSearch token_gradient_search(const TriggerObjective& objective, const TokenMask& mask, int length,
                                          TokenId filler, const TokenGradientConfig& config) {
  require(length >= 1, "token-gradient: trigger length must be >= 1");
  require(config.beam_width >= 1 && config.top_k >= 1 && config.max_sweeps >= 1,
          "token-gradient: beam_width, top_k and max_sweeps must be >= 1");
  require(std::any_of(mask.begin(), mask.end(), [](bool b) { return b; }), "token-gradient: mask admits no token");
  require(filler >= 0 && static_cast<std::size_t>(filler) < mask.size(), "token-gradient: filler outside vocabulary");
  const auto vocab = static_cast<Index>(mask.size());

  TokenGradientSearch out;
  std::vector<Beam> beams{{TokenIds(static_cast<std::size_t>(length), filler), 0.0}};
  beams[0].loss = objective.hard(beams[0].trigger);
  out.initial_loss = beams[0].loss;

  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    out.sweeps = sweep;
    const double before = beams.front().loss;
    for (std::size_t pos = 0; pos < static_cast<std::size_t>(length); ++pos) {
      std::vector<Beam> pool = beams;
      const auto seen = [&pool](const TokenIds& t) {
        return std::any_of(pool.begin(), pool.end(), [&t](const Beam& b) { return b.trigger == t; });
      };
      for (const Beam& beam : beams) {
        const Tensor grad = position_gradient(objective, beam.trigger, pos, vocab);
        const TokenId current = beam.trigger[pos];
        std::vector<TokenId> options;
        for (TokenId v = 0; v < static_cast<TokenId>(vocab); ++v) {
          if (mask[static_cast<std::size_t>(v)] && v != current) options.push_back(v);
        }
        const auto k = std::min(options.size(), static_cast<std::size_t>(config.top_k));
        std::partial_sort(options.begin(), options.begin() + static_cast<std::ptrdiff_t>(k), options.end(),
                          [&](TokenId a, TokenId b) {
                            const double sa = grad(0, a) - grad(0, current);
                            const double sb = grad(0, b) - grad(0, current);
                            return sa != sb ? sa > sb : a < b;
                          });
        for (std::size_t i = 0; i < k; ++i) {
          TokenIds next = beam.trigger;
          next[pos] = options[i];
          if (seen(next)) continue;
          const double loss = objective.hard(next);
          pool.push_back({std::move(next), loss});
        }
      }
      std::sort(pool.begin(), pool.end(), beam_before);
      pool.resize(std::min(pool.size(), static_cast<std::size_t>(config.beam_width)));
      beams = std::move(pool);
    }
    if (!(beams.front().loss > before)) break;
  }
  out.trigger = beams.front().trigger;
  out.final_loss = beams.front().loss;
  return out;
}

TokenMask victim_mask(const AttackModels& models) {
  models.validate();
  TokenMask mask(models.victim->vocab.size(), false);
  for (std::size_t g = 0; g < models.allowed.size(); ++g) {
    if (!models.allowed[g]) continue;
    const std::string& word = models.arae->vocab.token(static_cast<TokenId>(g));
    mask[static_cast<std::size_t>(models.victim->vocab.id(word))] = true;
  }
  return mask;
}

namespace {

void check_subset(std::span<const Example> dev_subset, int y) {
  require(!dev_subset.empty(), "baseline: empty dev subset");
  for (const auto& ex : dev_subset) {
    require(ex.label == y, "baseline: dev subset must hold only attacked-class examples");
  }
}

TriggerCandidate score_tokens(std::uint64_t seed, const Tokens& tokens, std::span<const Example> dev_subset,
                              const AttackModels& models, int y) {
  TriggerCandidate c;
  c.init_seed = seed;
  c.tokens = tokens;
  c.m1 = accuracy_under_trigger(*models.victim, dev_subset, victim_ids(*models.victim, tokens), y);
  c.m2 = lm_avg_ce(*models.lm, tokens);
  c.score = c.m1;
  return c;
}

}  // namespace

AttackResult token_gradient_attack(const AttackModels& models, std::span<const Example> dev_subset,
                                   const AttackConfig& config, const TokenGradientConfig& tg) {
  config.validate();
  check_subset(dev_subset, config.attacked_class);
  const VictimClassifier& victim = *models.victim;
  require(victim.vocab.contains(tg.filler), "token-gradient: filler '" + tg.filler + "' not in the victim vocabulary");
  const TokenGradientSearch search =
      token_gradient_search(victim_objective(victim, dev_subset, config.attacked_class), victim_mask(models),
                            config.trigger_length, victim.vocab.id(tg.filler), tg);
  AttackResult out;
  out.candidates.push_back(
      score_tokens(config.seed, victim.vocab.decode(search.trigger), dev_subset, models, config.attacked_class));
  out.selected = out.candidates.front();
  return out;
}

AttackResult random_arae_attack(const AttackModels& models, std::span<const Example> dev_subset,
                                const AttackConfig& config) {
  AttackConfig zero = config;
  zero.steps = 0;
  zero.lambda = 0.0;
  return nuts_attack(models, dev_subset, zero);
}

AttackResult random_sequence_attack(const AttackModels& models, std::span<const Example> dev_subset,
                                    const AttackConfig& config) {
  config.validate();
  models.validate();
  check_subset(dev_subset, config.attacked_class);
  std::vector<TokenId> pool;
  for (std::size_t g = 0; g < models.allowed.size(); ++g) {
    if (models.allowed[g]) pool.push_back(static_cast<TokenId>(g));
  }
  require(!pool.empty(), "random-seq: mask admits no token");
  const std::vector<std::uint64_t> seeds = candidate_seeds(config.seed, config.n_inits);
  AttackResult out;
  out.candidates.resize(seeds.size());
  parallel_for(config.n_inits, config.threads, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    Rng rng(seeds[k]);
    std::uniform_int_distribution<std::size_t> draw(0, pool.size() - 1);
    TokenIds ids;
    for (int t = 0; t < config.trigger_length; ++t) ids.push_back(pool[draw(rng)]);
    out.candidates[k] = score_tokens(seeds[k], models.arae->vocab.decode(ids), dev_subset, models, config.attacked_class);
  });
  out.selected = rerank(out.candidates, 0.0);
  return out;
}

}  // namespace nuts

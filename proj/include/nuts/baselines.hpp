// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_BASELINES_HPP
#define NUTS_BASELINES_HPP

#include "nuts/attack.hpp"

#include <functional>
#include <span>
#include <string>

namespace nuts {

/// A trigger objective to maximise, over one vocabulary.
struct TriggerObjective {
  /// Differentiable value for 1 x |vocab| rows (one per trigger position).
  std::function<Var(Graph&, std::span<const Var>)> soft;
  /// Exact value for a hard trigger.
  std::function<double(const TokenIds&)> hard;
};

/// Mean victim cross-entropy against `y` over `dev_subset`.
TriggerObjective victim_objective(const VictimClassifier& victim, std::span<const Example> dev_subset, int y);

struct TokenGradientConfig {
  int beam_width = 3;
  int top_k = 20;
  std::string filler = "the";
  int max_sweeps = 10;
};

struct TokenGradientSearch {
  TokenIds trigger;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int sweeps = 0;
};

/// Beam search over single-token flips ranked by the first-order score
/// grad^T (e_new - e_old); only strict improvements of the best beam continue
/// the search.
TokenGradientSearch token_gradient_search(const TriggerObjective& objective, const TokenMask& mask, int length,
                                          TokenId filler, const TokenGradientConfig& config);

/// The attack mask translated to victim-vocabulary ids.
TokenMask victim_mask(const AttackModels& models);

/// Baselines return the same record shape as NUTS; candidates are selected by m1 alone.
AttackResult token_gradient_attack(const AttackModels& models, std::span<const Example> dev_subset,
                                   const AttackConfig& config, const TokenGradientConfig& tg);

/// Greedy decodes of n_inits random noise rows, best m1 wins. Identical to
/// NUTS with zero steps and lambda = 0.
AttackResult random_arae_attack(const AttackModels& models, std::span<const Example> dev_subset,
                                const AttackConfig& config);

/// Uniform random allowed-token sequences, best m1 wins.
AttackResult random_sequence_attack(const AttackModels& models, std::span<const Example> dev_subset,
                                    const AttackConfig& config);

}  // namespace nuts

#endif  // NUTS_BASELINES_HPP

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Projected gradient ascent over the generator's noise input:
//
//   n_{t+1} = Proj_{B_eps(n_0)}( n_t + eta * grad_n L(F([Decoder(Generator(n_t)); x]), y) )
//
// run from many seeded initialisations, each candidate decoded greedily and
// scored by m1 (attacked-class dev accuracy) and m2 (LM cross-entropy).

#ifndef NUTS_ATTACK_HPP
#define NUTS_ATTACK_HPP

#include "nuts/candidate.hpp"
#include "nuts/models.hpp"

#include <functional>
#include <span>
#include <vector>

namespace nuts {

struct AttackConfig {
  double eps = 10.0;
  double eta = 1000.0;
  int steps = 1000;
  int n_inits = 256;
  double lambda = 0.05;
  int trigger_length = 3;
  double tau_start = 1.0;
  double tau_end = 0.1;
  int batch_size = 32;
  int attacked_class = 0;
  std::uint64_t seed = 1;
  bool normalize_gradient = false;
  /// Straight-through hard samples (true) or the soft relaxation (false).
  bool straight_through = true;
  /// Worker threads for candidates; 0 means one per hardware thread.
  int threads = 0;

  void validate() const;
  /// Geometric anneal from tau_start at step 0 to tau_end at step steps-1.
  double tau_at(int step) const;
};

/// Everything an attack reads; all shared read-only.
struct AttackModels {
  const ARAEModel* arae = nullptr;
  const VictimClassifier* victim = nullptr;
  const ScoringLM* lm = nullptr;
  TokenMask allowed;  ///< over the generator vocabulary
  Tensor bridge;      ///< |generator vocab| x |victim vocab| 0/1 map

  void validate() const;
};

/// Allowed generator tokens (shared vocabulary minus `exclusion`) and the
/// generator-to-victim bridge matrix.
AttackModels make_attack_models(const ARAEModel& arae, const VictimClassifier& victim, const ScoringLM& lm,
                                const std::set<std::string>& exclusion);

/// Differentiable objective of the noise row.
using NoiseLoss = std::function<Var(Graph&, Var noise)>;

struct AscentStep {
  Tensor next;
  Tensor gradient;  ///< raw gradient of the loss at the current point
  double loss = 0.0;
};

/// One projected ascent step: l2_project(n + eta * g, n0, eps), g = grad loss
/// (unit-normalised when `normalize`).
AscentStep ascent_step(const Tensor& n, const Tensor& n0, const NoiseLoss& loss, double eta, double eps,
                       bool normalize);

/// Victim cross-entropy against `y` on `batch` with the decoded trigger of
/// Generator(noise) prepended.
Var trigger_loss(const AttackModels& models, Graph& g, Var noise, std::span<const Example> batch, int y, int length,
                 double tau, Rng& rng, bool straight_through);

/// attack_step for the NUTS objective; `rng` drives the Gumbel noise.
AscentStep attack_step(const Tensor& n, const Tensor& n0, std::span<const Example> batch, const AttackModels& models,
                       const AttackConfig& config, double tau, Rng& rng);

/// Greedy trigger for a noise row, scored on the dev subset.
TriggerCandidate score_noise(std::uint64_t init_seed, const Tensor& noise, std::span<const Example> dev_subset,
                             const AttackModels& models, const AttackConfig& config);

/// Initial noise row drawn from `init_seed`.
Tensor initial_noise(std::uint64_t init_seed, Index noise_dim);

struct CandidateTrace {
  double max_offset = 0.0;  ///< largest ||n_t - n_0|| seen
  std::vector<double> losses;
};

TriggerCandidate run_candidate(std::uint64_t init_seed, std::span<const Example> dev_subset,
                               const AttackModels& models, const AttackConfig& config, CandidateTrace* trace = nullptr);

struct AttackResult {
  TriggerCandidate selected;
  std::vector<TriggerCandidate> candidates;  ///< in seed-index order
};

/// Seeds of the candidates: derive_seed(master, i), i < count.
std::vector<std::uint64_t> candidate_seeds(std::uint64_t master, int count);

/// Runs `work(i)` for i < count on `threads` workers; results keyed by index.
/// The first failing index (lowest) rethrows.
void parallel_for(int count, int threads, const std::function<void(int)>& work);

AttackResult nuts_attack(const AttackModels& models, std::span<const Example> dev_subset, const AttackConfig& config);

}  // namespace nuts

#endif  // NUTS_ATTACK_HPP

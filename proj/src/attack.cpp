// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/attack.hpp"

#include "nuts/metrics.hpp"
#include "nuts/projection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace nuts {

void AttackConfig::validate() const {
  require(eps > 0.0, "attack: eps must be > 0");
  require(eta > 0.0, "attack: eta must be > 0");
  require(steps >= 0, "attack: steps must be >= 0");
  require(n_inits >= 1, "attack: n_inits must be >= 1");
  require(lambda >= 0.0, "attack: lambda must be >= 0");
  require(trigger_length >= 1, "attack: trigger_length must be >= 1");
  require(tau_start > 0.0 && tau_end > 0.0, "attack: temperatures must be > 0");
  require(batch_size >= 1, "attack: batch_size must be >= 1");
  require(attacked_class >= 0, "attack: attacked_class must be >= 0");
  require(threads >= 0, "attack: threads must be >= 0");
}

double AttackConfig::tau_at(int step) const {
  if (steps <= 1) return tau_start;
  const double frac = static_cast<double>(step) / static_cast<double>(steps - 1);
  return tau_start * std::pow(tau_end / tau_start, frac);
}

void AttackModels::validate() const {
  require(arae && victim && lm, "attack: ARAE, victim and LM are all required");
  require(allowed.size() == arae->vocab.size(), "attack: mask size differs from the generator vocabulary");
  require(bridge.rows() == static_cast<Index>(arae->vocab.size()) &&
              bridge.cols() == static_cast<Index>(victim->vocab.size()),
          "attack: bridge shape must be |generator vocab| x |victim vocab|");
}

AttackModels make_attack_models(const ARAEModel& arae, const VictimClassifier& victim, const ScoringLM& lm,
                                const std::set<std::string>& exclusion) {
  AttackModels m;
  m.arae = &arae;
  m.victim = &victim;
  m.lm = &lm;
  m.allowed = intersect_vocab(victim.vocab, arae.vocab, exclusion);
  m.bridge = Tensor::Zero(static_cast<Index>(arae.vocab.size()), static_cast<Index>(victim.vocab.size()));
  const TokenIds map = bridge_vocab(arae.vocab, victim.vocab);
  for (std::size_t g = 0; g < map.size(); ++g) {
    if (map[g] != Vocab::kUnk || g == static_cast<std::size_t>(Vocab::kUnk)) {
      m.bridge(static_cast<Index>(g), map[g]) = 1.0;
    }
  }
  return m;
}

AscentStep ascent_step(const Tensor& n, const Tensor& n0, const NoiseLoss& loss, double eta, double eps,
                       bool normalize) {
  Graph g;
  const Var noise = g.variable(n);
  const Var value = loss(g, noise);
  AscentStep out;
  out.loss = value.item();
  out.gradient = g.backward(value).of(noise);
  Tensor direction = out.gradient;
  if (normalize) {
    const double norm = direction.norm();
    if (norm > 0.0) direction /= norm;
  }
  out.next = l2_project(Tensor(n + eta * direction), n0, eps);
  return out;
}

Var trigger_loss(const AttackModels& models, Graph& g, Var noise, std::span<const Example> batch, int y, int length,
                 double tau, Rng& rng, bool straight_through) {
  require(!batch.empty(), "attack: empty benign batch");
  const Bound arae(g, models.arae->params, false);
  const Bound victim(g, models.victim->params, false);
  const Var latent = generate(arae, noise);
  const Var bridge = g.constant_ref(models.bridge);
  std::vector<Var> rows;
  for (const GumbelSample& s : decode_soft(arae, latent, length, tau, rng, models.allowed, straight_through)) {
    rows.push_back(matmul(s.onehot, bridge));
  }
  const std::vector<int> targets(batch.size(), y);
  return cross_entropy(classify(*models.victim, victim, rows, batch), targets);
}

AscentStep attack_step(const Tensor& n, const Tensor& n0, std::span<const Example> batch, const AttackModels& models,
                       const AttackConfig& config, double tau, Rng& rng) {
  require(!batch.empty(), "attack_step: empty batch");
  for (const auto& ex : batch) {
    require(ex.label == config.attacked_class, "attack_step: batch holds an example outside the attacked class");
  }
  const NoiseLoss loss = [&](Graph& g, Var noise) {
    return trigger_loss(models, g, noise, batch, config.attacked_class, config.trigger_length, tau, rng,
                        config.straight_through);
  };
  return ascent_step(n, n0, loss, config.eta, config.eps, config.normalize_gradient);
}

Tensor initial_noise(std::uint64_t init_seed, Index noise_dim) {
  Rng rng(init_seed);
  return standard_normal<double>(1, noise_dim, rng);
}

TriggerCandidate score_noise(std::uint64_t init_seed, const Tensor& noise, std::span<const Example> dev_subset,
                             const AttackModels& models, const AttackConfig& config) {
  const TokenIds ids =
      decode_greedy(*models.arae, generate(*models.arae, noise), config.trigger_length, models.allowed);
  TriggerCandidate c;
  c.init_seed = init_seed;
  c.n_final = noise;
  c.tokens = models.arae->vocab.decode(ids);
  c.m1 = accuracy_under_trigger(*models.victim, dev_subset, victim_ids(*models.victim, c.tokens),
                                config.attacked_class);
  c.m2 = lm_avg_ce(*models.lm, c.tokens);
  c.score = rerank_score(c.m1, c.m2, config.lambda);
  return c;
}

namespace {

void check_subset(std::span<const Example> dev_subset, int y) {
  require(!dev_subset.empty(), "attack: empty dev subset");
  for (const auto& ex : dev_subset) {
    require(ex.label == y, "attack: dev subset must hold only attacked-class examples");
  }
}

}  // namespace

TriggerCandidate run_candidate(std::uint64_t init_seed, std::span<const Example> dev_subset,
                               const AttackModels& models, const AttackConfig& config, CandidateTrace* trace) {
  config.validate();
  models.validate();
  check_subset(dev_subset, config.attacked_class);
  Rng rng(init_seed);
  const Tensor n0 = standard_normal<double>(1, models.arae->dims.noise, rng);
  Tensor n = n0;

  std::vector<std::size_t> order(dev_subset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = std::min(order.size(), static_cast<std::size_t>(config.batch_size));
  std::vector<Example> batch(batch_size);
  for (int t = 0; t < config.steps; ++t) {
    // Partial Fisher-Yates: a fresh seeded batch without replacement.
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
      batch[i] = dev_subset[order[i]];
    }
    const AscentStep step = attack_step(n, n0, batch, models, config, config.tau_at(t), rng);
    n = step.next;
    if (trace) {
      trace->max_offset = std::max(trace->max_offset, (n - n0).norm());
      trace->losses.push_back(step.loss);
    }
  }
  return score_noise(init_seed, n, dev_subset, models, config);
}

std::vector<std::uint64_t> candidate_seeds(std::uint64_t master, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(derive_seed(master, static_cast<std::uint64_t>(i)));
  return seeds;
}

void parallel_for(int count, int threads, const std::function<void(int)>& work) {
  if (count <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  const auto loop = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        work(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

AttackResult nuts_attack(const AttackModels& models, std::span<const Example> dev_subset, const AttackConfig& config) {
  config.validate();
  models.validate();
  check_subset(dev_subset, config.attacked_class);
  const std::vector<std::uint64_t> seeds = candidate_seeds(config.seed, config.n_inits);
  AttackResult out;
  out.candidates.resize(seeds.size());
  parallel_for(config.n_inits, config.threads, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    out.candidates[k] = run_candidate(seeds[k], dev_subset, models, config);
  });
  out.selected = rerank(out.candidates, config.lambda);
  return out;
}

}  // namespace nuts

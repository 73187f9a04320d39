// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// The model families of the pipeline:
//
//   ARAEModel         encoder / decoder / noise-to-latent generator / critic
//   VictimClassifier  the attacked text classifier (three architectures)
//   ScoringLM         small autoregressive LM used to score naturalness
//
// Every model is a plain value (vocabulary, dimensions, ParamSet). Forward
// passes are free functions that read the weights through a Bound view, so the
// same model can be trained (gradient-requiring leaves) or shared read-only by
// many concurrent attack graphs (borrowed constants).

#ifndef NUTS_MODELS_HPP
#define NUTS_MODELS_HPP

#include "nuts/gumbel.hpp"
#include "nuts/layers.hpp"
#include "nuts/text.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nuts {

// --- ARAE -----------------------------------------------------------------

struct AraeDims {
  Index noise = 16;
  Index latent = 32;
  Index hidden = 64;
  Index embed = 32;
  Index gen_hidden = 64;
  Index critic_hidden = 64;
};

struct ARAEModel {
  Vocab vocab;
  AraeDims dims;
  ParamSet params;
  std::uint64_t seed = 0;
};

ARAEModel init_arae(Vocab vocab, const AraeDims& dims, std::uint64_t seed);

/// Noise rows (B x noise) to unit-norm latent rows (B x latent).
Var generate(const Bound& p, Var noise);
/// Convenience: latent for one noise row, no graph kept.
Tensor generate(const ARAEModel& model, const Tensor& noise);

/// Encodes a batch of token sequences to unit-norm latent rows.
Var encode(const Bound& p, const std::vector<TokenIds>& batch);

/// Scalar critic score per latent row (B x 1).
Var critic(const Bound& p, Var latent);
/// d critic / d latent per row, built from ordinary ops so it can itself be
/// differentiated with respect to the critic weights (gradient penalty).
Var critic_input_gradient(const Bound& p, Var latent);

struct TeacherForced {
  Var loss;              ///< mean token cross-entropy over non-pad targets
  std::size_t correct = 0;
  std::size_t total = 0;
};

/// Decoder run with teacher forcing on `batch` (targets end with EOS).
TeacherForced decoder_reconstruction(const Bound& p, Var latent, const std::vector<TokenIds>& batch);

/// Allowed-token mask with every special token removed. Throws if nothing is left.
TokenMask trigger_mask(const TokenMask& allowed);

/// Autoregressive decode of exactly `length` tokens from one latent row.
/// Disallowed tokens are masked before each Gumbel-softmax draw; the next step
/// is fed the straight-through one-hot embedding when `hard`, otherwise the
/// soft sample.
std::vector<GumbelSample> decode_soft(const Bound& p, Var latent, int length, double tau, Rng& rng,
                                      const TokenMask& allowed, bool hard = true);
/// Same decode with zero Gumbel noise.
std::vector<GumbelSample> decode_soft_noiseless(const Bound& p, Var latent, int length, double tau,
                                                const TokenMask& allowed, bool hard = true);

/// Argmax decode of exactly `length` allowed tokens.
TokenIds decode_greedy(const ARAEModel& model, const Tensor& latent, int length, const TokenMask& allowed);

/// Argmax decode until EOS (or `max_length` tokens), only specials excluded.
TokenIds decode_sentence(const ARAEModel& model, const Tensor& latent, int max_length);

// --- victim classifiers ---------------------------------------------------

enum class VictimArch { kLstm2, kBag, kPair };

VictimArch parse_arch(const std::string& name);
std::string arch_name(VictimArch arch);

struct VictimDims {
  Index embed = 32;
  Index hidden = 48;
  Index ff_hidden = 48;
};

struct VictimClassifier {
  Vocab vocab;
  VictimArch arch = VictimArch::kLstm2;
  VictimDims dims;
  int classes = 2;
  ParamSet params;
  std::uint64_t seed = 0;
};

VictimClassifier init_victim(Vocab vocab, VictimArch arch, const VictimDims& dims, int classes, std::uint64_t seed);

/// Logits (B x classes) for [trigger; text] per example. Each trigger row is a
/// 1 x |victim vocab| distribution (soft sample or one-hot) and multiplies
/// the embedding table. Pair tasks prepend the trigger to the hypothesis only.
Var classify(const VictimClassifier& model, const Bound& p, std::span<const Var> trigger,
             std::span<const Example> batch);
/// Same with a hard trigger given as token ids.
Var classify(const VictimClassifier& model, const Bound& p, const TokenIds& trigger,
             std::span<const Example> batch);

/// Predicted class per example with a hard trigger prepended. Examples are
/// evaluated in fixed-size chunks in the given order.
std::vector<int> predict(const VictimClassifier& model, const TokenIds& trigger, std::span<const Example> batch);

// --- scoring LM ------------------------------------------------------------

struct LmDims {
  Index embed = 32;
  Index hidden = 64;
};

struct ScoringLM {
  Vocab vocab;
  LmDims dims;
  ParamSet params;
  std::uint64_t seed = 0;
};

/// Output projection starts at zero, i.e. the uniform next-token distribution.
ScoringLM init_lm(Vocab vocab, const LmDims& dims, std::uint64_t seed);

/// Mean next-token cross-entropy over a padded batch; BOS is prepended and,
/// when `with_eos`, EOS is appended as a final target.
Var lm_loss(const Bound& p, const std::vector<TokenIds>& batch, bool with_eos);

/// Mean over positions of -log p(token_i | BOS .. token_{i-1}), in nats.
/// Out-of-vocabulary tokens are scored as UNK.
double lm_avg_ce(const ScoringLM& model, const Tokens& tokens);
double lm_avg_ce(const ScoringLM& model, const TokenIds& tokens);

}  // namespace nuts

#endif  // NUTS_MODELS_HPP

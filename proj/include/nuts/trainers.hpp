// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_TRAINERS_HPP
#define NUTS_TRAINERS_HPP

#include "nuts/models.hpp"

#include <json.hpp>

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nuts {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 0.5;
  double momentum = 0.9;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  // ARAE only.
  int critic_steps = 5;
  double gp_weight = 10.0;
  double critic_learning_rate = 0.05;
  double gen_learning_rate = 0.05;
  double adv_weight = 0.1;      ///< scale of the encoder's adversarial term
  double latent_noise = 0.05;   ///< std of noise added to codes before decoding

  void validate() const;
};

/// Raised when a loss or gradient stops being finite; the message names the
/// trainer and phase.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called once per finished epoch with that epoch's metrics record.
using EpochCallback = std::function<void(const nlohmann::json&)>;

/// SGD with momentum and global-norm gradient clipping over the trainable
/// entries of one Bound view.
class Sgd {
 public:
  Sgd(double learning_rate, double momentum, double clip_norm)
      : lr_(learning_rate), momentum_(momentum), clip_(clip_norm) {}

  /// Updates the tracked parameters of `bound` whose names start with
  /// `prefix` and returns their pre-clipping gradient norm.
  double step(ParamSet& params, const Bound& bound, const Gradients& grads, std::string_view prefix = {});

 private:
  double lr_;
  double momentum_;
  double clip_;
  std::map<std::string, Tensor> velocity_;
};

struct AraeTraining {
  ARAEModel model;
  std::vector<nlohmann::json> log;
};

AraeTraining train_arae(const std::vector<TokenIds>& corpus, const Vocab& vocab, const AraeDims& dims,
                        const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Teacher-forced token accuracy of the noiseless autoencoder.
double reconstruction_accuracy(const ARAEModel& model, const std::vector<TokenIds>& corpus);

struct ClassifierTraining {
  VictimClassifier model;
  double dev_accuracy = 0.0;
  std::vector<nlohmann::json> log;
};

ClassifierTraining train_classifier(const std::vector<Example>& train, const std::vector<Example>& dev,
                                    const Vocab& vocab, VictimArch arch, const VictimDims& dims, int classes,
                                    const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Fraction of `examples` predicted correctly with no trigger.
double clean_accuracy(const VictimClassifier& model, const std::vector<Example>& examples);

struct LmTraining {
  ScoringLM model;
  double dev_ce = 0.0;
  std::vector<nlohmann::json> log;
};

LmTraining train_lm(const std::vector<TokenIds>& train, const std::vector<TokenIds>& dev, const Vocab& vocab,
                    const LmDims& dims, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Token-weighted mean next-token cross-entropy (no EOS target), in nats.
double lm_corpus_ce(const ScoringLM& model, const std::vector<TokenIds>& corpus);

}  // namespace nuts

#endif  // NUTS_TRAINERS_HPP

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nuts {

void TrainConfig::validate() const {
  require(epochs >= 0, "train: epochs must be >= 0");
  require(batch_size >= 1, "train: batch_size must be >= 1");
  require(learning_rate > 0.0 && critic_learning_rate > 0.0 && gen_learning_rate > 0.0,
          "train: learning rates must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "train: momentum must lie in [0, 1)");
  require(clip_norm > 0.0, "train: clip_norm must be positive");
  require(critic_steps >= 1, "train: critic_steps must be >= 1");
  require(gp_weight >= 0.0 && adv_weight >= 0.0 && latent_noise >= 0.0,
          "train: gp_weight, adv_weight and latent_noise must be >= 0");
}

double Sgd::step(ParamSet& params, const Bound& bound, const Gradients& grads, std::string_view prefix) {
  double sq = 0.0;
  std::vector<std::pair<const std::string*, Tensor>> tracked;
  for (const auto& [name, var] : bound.vars()) {
    if (!grads.tracked(var) || name.rfind(prefix, 0) != 0) continue;
    tracked.emplace_back(&name, grads.of(var));
    sq += tracked.back().second.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  const double scale = norm > clip_ ? clip_ / norm : 1.0;
  for (auto& [name, g] : tracked) {
    Tensor& v = velocity_[*name];
    if (v.size() == 0) v = Tensor::Zero(g.rows(), g.cols());
    v = momentum_ * v + scale * g;
    params.at(*name) -= lr_ * v;
  }
  return norm;
}

namespace {

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, int batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch_size)) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + static_cast<std::size_t>(batch_size))));
  }
  return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

/// Runs `body`, turning a numeric failure into TrainingDiverged naming the phase.
template <typename Fn>
auto guarded(const std::string& trainer, const std::string& phase, int epoch, Fn&& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    throw TrainingDiverged(trainer + ": divergence in " + phase + " phase at epoch " + std::to_string(epoch) + ": " +
                           e.what());
  }
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
  return v;
}

}  // namespace

AraeTraining train_arae(const std::vector<TokenIds>& corpus, const Vocab& vocab, const AraeDims& dims,
                        const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require(!corpus.empty(), "train_arae: empty corpus");
  for (const auto& s : corpus) require(!s.empty(), "train_arae: empty sentence in corpus");

  AraeTraining out{init_arae(vocab, dims, config.seed), {}};
  if (config.epochs == 0) return out;
  ParamSet& params = out.model.params;
  Rng rng(derive_seed(config.seed, 1));

  Sgd recon_opt(config.learning_rate, config.momentum, config.clip_norm);
  Sgd critic_opt(config.critic_learning_rate, config.momentum, config.clip_norm);
  Sgd gen_opt(config.gen_learning_rate, config.momentum, config.clip_norm);
  Sgd enc_adv_opt(config.gen_learning_rate, config.momentum, config.clip_norm);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double recon_sum = 0.0, critic_sum = 0.0, gp_sum = 0.0, gen_sum = 0.0;
    double gp_min = std::numeric_limits<double>::infinity();
    std::size_t correct = 0, total = 0, batches = 0, critic_updates = 0;

    for (const auto& idx : epoch_batches(corpus.size(), config.batch_size, rng)) {
      const std::vector<TokenIds> batch = pick(corpus, idx);
      const auto rows = static_cast<Index>(batch.size());

      // Reconstruction: encoder and decoder.
      const Tensor codes = guarded("train_arae", "reconstruction", epoch, [&] {
        Graph g;
        const Bound p = bind_partial(g, params, {"enc.", "dec."});
        const Var z = encode(p, batch);
        Tensor clean = z.value();
        const Var noisy = z + g.constant(config.latent_noise * standard_normal<double>(rows, dims.latent, rng));
        const TeacherForced tf = decoder_reconstruction(p, noisy, batch);
        recon_sum += finite_or_throw(tf.loss.item(), "reconstruction loss");
        correct += tf.correct;
        total += tf.total;
        recon_opt.step(params, p, g.backward(tf.loss));
        return clean;
      });

      // Critic: score real codes high, generated codes low, gradient penalty on interpolates.
      guarded("train_arae", "critic", epoch, [&] {
        for (int k = 0; k < config.critic_steps; ++k) {
          Graph g;
          const Bound p = bind_partial(g, params, {"critic."});
          const Tensor fake = generate(p, g.constant(standard_normal<double>(rows, dims.noise, rng))).value();
          Tensor mix(rows, dims.latent);
          for (Index r = 0; r < rows; ++r) {
            const double a = unit(rng);
            mix.row(r) = a * codes.row(r) + (1.0 - a) * fake.row(r);
          }
          const Var slack = affine(row_norms(critic_input_gradient(p, g.constant(std::move(mix)))), 1.0, -1.0);
          const Var gp = mean(slack * slack);
          const Var loss = mean(critic(p, g.constant(fake))) - mean(critic(p, g.constant_ref(codes))) +
                           affine(gp, config.gp_weight);
          critic_sum += finite_or_throw(loss.item(), "critic loss");
          gp_sum += gp.item();
          gp_min = std::min(gp_min, gp.item());
          ++critic_updates;
          critic_opt.step(params, p, g.backward(loss));
        }
        return 0;
      });

      // Adversarial: generator raises its critic score, encoder lowers the real one.
      guarded("train_arae", "adversarial", epoch, [&] {
        Graph g;
        const Bound p = bind_partial(g, params, {"gen.", "enc."});
        const Var gen_score = mean(critic(p, generate(p, g.constant(standard_normal<double>(rows, dims.noise, rng)))));
        const Var enc_score = mean(critic(p, encode(p, batch)));
        const Var loss = affine(gen_score, -1.0) + affine(enc_score, config.adv_weight);
        gen_sum += finite_or_throw(gen_score.item(), "generator score");
        const Gradients grads = g.backward(loss);
        gen_opt.step(params, p, grads, "gen.");
        enc_adv_opt.step(params, p, grads, "enc.");
        return 0;
      });
      ++batches;
    }

    nlohmann::json rec = {{"trainer", "arae"},
                          {"epoch", epoch},
                          {"recon_loss", recon_sum / static_cast<double>(batches)},
                          {"recon_acc", static_cast<double>(correct) / static_cast<double>(total)},
                          {"critic_loss", critic_sum / static_cast<double>(critic_updates)},
                          {"gp", gp_sum / static_cast<double>(critic_updates)},
                          {"gp_min", gp_min},
                          {"gen_score", gen_sum / static_cast<double>(batches)}};
    if (on_epoch) on_epoch(rec);
    out.log.push_back(std::move(rec));
  }
  round_to_storage_precision(params);
  return out;
}

double reconstruction_accuracy(const ARAEModel& model, const std::vector<TokenIds>& corpus) {
  require(!corpus.empty(), "reconstruction_accuracy: empty corpus");
  constexpr std::size_t kChunk = 64;
  std::size_t correct = 0, total = 0;
  for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
    const std::vector<TokenIds> batch(corpus.begin() + static_cast<std::ptrdiff_t>(start),
                                      corpus.begin() + static_cast<std::ptrdiff_t>(std::min(corpus.size(), start + kChunk)));
    Graph g;
    const Bound p(g, model.params, false);
    const TeacherForced tf = decoder_reconstruction(p, encode(p, batch), batch);
    correct += tf.correct;
    total += tf.total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

ClassifierTraining train_classifier(const std::vector<Example>& train, const std::vector<Example>& dev,
                                    const Vocab& vocab, VictimArch arch, const VictimDims& dims, int classes,
                                    const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require(!train.empty(), "train_classifier: empty training set");
  for (const auto& ex : train) require(ex.label >= 0 && ex.label < classes, "train_classifier: label out of range");

  ClassifierTraining out{init_victim(vocab, arch, dims, classes, config.seed), 0.0, {}};
  ParamSet& params = out.model.params;
  Rng rng(derive_seed(config.seed, 2));
  Sgd opt(config.learning_rate, config.momentum, config.clip_norm);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (const auto& idx : epoch_batches(train.size(), config.batch_size, rng)) {
      const std::vector<Example> batch = pick(train, idx);
      guarded("train_classifier", "classification", epoch, [&] {
        Graph g;
        const Bound p(g, params, true);
        std::vector<int> labels;
        for (const auto& ex : batch) labels.push_back(ex.label);
        const Var loss = cross_entropy(classify(out.model, p, TokenIds{}, batch), labels);
        loss_sum += finite_or_throw(loss.item(), "classification loss");
        opt.step(params, p, g.backward(loss));
        return 0;
      });
      ++batches;
    }
    nlohmann::json rec = {{"trainer", "classifier"},
                          {"arch", arch_name(arch)},
                          {"epoch", epoch},
                          {"train_loss", loss_sum / static_cast<double>(batches)}};
    if (!dev.empty()) rec["dev_acc"] = clean_accuracy(out.model, dev);
    if (on_epoch) on_epoch(rec);
    out.log.push_back(std::move(rec));
  }
  round_to_storage_precision(params);
  if (!dev.empty()) out.dev_accuracy = clean_accuracy(out.model, dev);
  return out;
}

double clean_accuracy(const VictimClassifier& model, const std::vector<Example>& examples) {
  require(!examples.empty(), "clean_accuracy: empty dataset");
  const std::vector<int> pred = predict(model, {}, examples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == examples[i].label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

LmTraining train_lm(const std::vector<TokenIds>& train, const std::vector<TokenIds>& dev, const Vocab& vocab,
                    const LmDims& dims, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require(!train.empty(), "train_lm: empty corpus");
  LmTraining out{init_lm(vocab, dims, config.seed), 0.0, {}};
  ParamSet& params = out.model.params;
  Rng rng(derive_seed(config.seed, 3));
  Sgd opt(config.learning_rate, config.momentum, config.clip_norm);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (const auto& idx : epoch_batches(train.size(), config.batch_size, rng)) {
      const std::vector<TokenIds> batch = pick(train, idx);
      guarded("train_lm", "language-model", epoch, [&] {
        Graph g;
        const Bound p(g, params, true);
        const Var loss = lm_loss(p, batch, true);
        loss_sum += finite_or_throw(loss.item(), "language-model loss");
        opt.step(params, p, g.backward(loss));
        return 0;
      });
      ++batches;
    }
    nlohmann::json rec = {{"trainer", "lm"}, {"epoch", epoch}, {"train_loss", loss_sum / static_cast<double>(batches)}};
    if (!dev.empty()) rec["dev_ce"] = lm_corpus_ce(out.model, dev);
    if (on_epoch) on_epoch(rec);
    out.log.push_back(std::move(rec));
  }
  round_to_storage_precision(params);
  if (!dev.empty()) out.dev_ce = lm_corpus_ce(out.model, dev);
  return out;
}

double lm_corpus_ce(const ScoringLM& model, const std::vector<TokenIds>& corpus) {
  require(!corpus.empty(), "lm_corpus_ce: empty corpus");
  constexpr std::size_t kChunk = 64;
  double weighted = 0.0;
  std::size_t tokens = 0;
  for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
    const std::vector<TokenIds> batch(corpus.begin() + static_cast<std::ptrdiff_t>(start),
                                      corpus.begin() + static_cast<std::ptrdiff_t>(std::min(corpus.size(), start + kChunk)));
    std::size_t n = 0;
    for (const auto& s : batch) n += s.size();
    Graph g;
    const Bound p(g, model.params, false);
    weighted += lm_loss(p, batch, false).item() * static_cast<double>(n);
    tokens += n;
  }
  return weighted / static_cast<double>(tokens);
}

}  // namespace nuts

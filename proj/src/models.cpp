// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/models.hpp"

#include <algorithm>

namespace nuts {

namespace {

/// Column of token ids at position t for a padded batch, plus which rows are
/// still inside their sequence.
struct Column {
  TokenIds ids;
  std::vector<bool> live;
};

Column column_at(const std::vector<const TokenIds*>& seqs, std::size_t t) {
  Column c;
  c.ids.reserve(seqs.size());
  c.live.reserve(seqs.size());
  for (const TokenIds* s : seqs) {
    const bool live = t < s->size();
    c.ids.push_back(live ? (*s)[t] : Vocab::kPad);
    c.live.push_back(live);
  }
  return c;
}

std::size_t max_length(const std::vector<const TokenIds*>& seqs) {
  std::size_t n = 0;
  for (const TokenIds* s : seqs) n = std::max(n, s->size());
  return n;
}

std::vector<const TokenIds*> pointers(const std::vector<TokenIds>& batch) {
  std::vector<const TokenIds*> out;
  for (const auto& s : batch) out.push_back(&s);
  return out;
}

/// Runs one masked LSTM over padded sequences starting from `state`.
LstmState run_masked(const LstmWeights& w, Var table, const std::vector<const TokenIds*>& seqs, LstmState state) {
  const std::size_t steps = max_length(seqs);
  for (std::size_t t = 0; t < steps; ++t) {
    const Column col = column_at(seqs, t);
    state = lstm_step_masked(w, gather(table, col.ids), state, col.live);
  }
  return state;
}

/// Accumulates sum_t count_t * ce_t and normalises by the total count, i.e.
/// the mean over every scored token of a stepped sequence model.
class TokenLoss {
 public:
  void add(Var logits, const std::vector<int>& targets) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      if (targets[r] < 0) continue;
      ++count;
      if (argmax(logits.value().row(static_cast<Index>(r))) == targets[r]) ++correct_;
    }
    if (count == 0) return;
    const Var term = affine(cross_entropy(logits, targets), static_cast<double>(count));
    sum_ = has_sum_ ? sum_ + term : term;
    has_sum_ = true;
    total_ += count;
  }

  TeacherForced finish() const {
    require(has_sum_, "token loss over an empty batch");
    return {affine(sum_, 1.0 / static_cast<double>(total_)), correct_, total_};
  }

 private:
  Var sum_;
  bool has_sum_ = false;
  std::size_t correct_ = 0;
  std::size_t total_ = 0;
};

}  // namespace

// --- ARAE -----------------------------------------------------------------

ARAEModel init_arae(Vocab vocab, const AraeDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  ARAEModel m{std::move(vocab), dims, {}, seed};
  const auto v = static_cast<Index>(m.vocab.size());
  init_embedding(m.params, "enc.emb", v, dims.embed, rng);
  init_lstm(m.params, "enc.lstm", dims.embed, dims.hidden, rng);
  init_linear(m.params, "enc.out", dims.hidden, dims.latent, rng);
  init_embedding(m.params, "dec.emb", v, dims.embed, rng);
  init_linear(m.params, "dec.init", dims.latent, dims.hidden, rng);
  init_lstm(m.params, "dec.lstm", dims.embed + dims.latent, dims.hidden, rng);
  init_linear(m.params, "dec.out", dims.hidden, v, rng);
  init_linear(m.params, "gen.l1", dims.noise, dims.gen_hidden, rng);
  init_linear(m.params, "gen.l2", dims.gen_hidden, dims.latent, rng);
  init_linear(m.params, "critic.l1", dims.latent, dims.critic_hidden, rng);
  init_linear(m.params, "critic.l2", dims.critic_hidden, dims.critic_hidden, rng);
  init_linear(m.params, "critic.out", dims.critic_hidden, 1, rng);
  round_to_storage_precision(m.params);
  return m;
}

Var generate(const Bound& p, Var noise) {
  require(noise.cols() == p["gen.l1.W"].rows(), "generate: noise dimension mismatch");
  const Var h = tanh(linear(p, "gen.l1", noise));
  return normalize_rows(linear(p, "gen.l2", h));
}

Tensor generate(const ARAEModel& model, const Tensor& noise) {
  Graph g;
  const Bound p(g, model.params, false);
  return generate(p, g.constant(noise)).value();
}

Var encode(const Bound& p, const std::vector<TokenIds>& batch) {
  require(!batch.empty(), "encode: empty batch");
  const LstmWeights w = lstm_weights(p, "enc.lstm");
  const auto seqs = pointers(batch);
  const LstmState s = run_masked(w, p["enc.emb"], seqs, lstm_zero_state(p.graph(), static_cast<Index>(batch.size()), w.hidden));
  return normalize_rows(linear(p, "enc.out", s.h));
}

Var critic(const Bound& p, Var latent) {
  const Var h1 = tanh(linear(p, "critic.l1", latent));
  const Var h2 = tanh(linear(p, "critic.l2", h1));
  return linear(p, "critic.out", h2);
}

Var critic_input_gradient(const Bound& p, Var latent) {
  const Var a1 = tanh(linear(p, "critic.l1", latent));
  const Var a2 = tanh(linear(p, "critic.l2", a1));
  const Var d_a2 = repeat_rows(transpose(p["critic.out.W"]), latent.rows());
  const Var d_z2 = d_a2 * affine(a2 * a2, -1.0, 1.0);
  const Var d_a1 = matmul(d_z2, transpose(p["critic.l2.W"]));
  const Var d_z1 = d_a1 * affine(a1 * a1, -1.0, 1.0);
  return matmul(d_z1, transpose(p["critic.l1.W"]));
}

namespace {

struct DecoderStep {
  const Bound* p;
  LstmWeights w;
  Var table;
  Var latent;

  DecoderStep(const Bound& bound, Var z)
      : p(&bound), w(lstm_weights(bound, "dec.lstm")), table(bound["dec.emb"]), latent(z) {}

  LstmState initial() const {
    Graph& g = p->graph();
    return {tanh(linear(*p, "dec.init", latent)), g.constant(Tensor::Zero(latent.rows(), w.hidden))};
  }

  /// Feeds `input` (rows x embed) and returns the next-token logits.
  Var operator()(Var input, LstmState& state, const std::vector<bool>* live = nullptr) const {
    const Var parts[] = {input, latent};
    const Var x = concat_cols(parts);
    state = live ? lstm_step_masked(w, x, state, *live) : lstm_step(w, x, state);
    return linear(*p, "dec.out", state.h);
  }
};

std::vector<GumbelSample> decode_soft_impl(const Bound& p, Var latent, int length, double tau, Rng* rng,
                                           const TokenMask& allowed, bool hard) {
  require(length >= 1, "decode_soft: length must be >= 1");
  require(latent.rows() == 1, "decode_soft: expects a single latent row");
  require(tau > 0.0, "decode_soft: temperature must be positive");
  const TokenMask mask = trigger_mask(allowed);
  require(static_cast<Index>(mask.size()) == p["dec.out.W"].cols(), "decode_soft: mask size differs from vocabulary");
  DecoderStep step(p, latent);
  LstmState state = step.initial();
  const TokenId bos[] = {Vocab::kBos};
  Var input = gather(step.table, bos);
  std::vector<GumbelSample> out;
  for (int t = 0; t < length; ++t) {
    const Var logits = mask_columns(step(input, state), mask);
    GumbelSample s = rng ? gumbel_softmax(logits, tau, *rng, hard)
                         : gumbel_softmax(logits, tau, Tensor::Zero(1, logits.cols()), hard);
    input = matmul(s.onehot, step.table);
    out.push_back(s);
  }
  return out;
}

}  // namespace

TeacherForced decoder_reconstruction(const Bound& p, Var latent, const std::vector<TokenIds>& batch) {
  require(latent.rows() == static_cast<Index>(batch.size()), "decoder_reconstruction: one latent per sequence");
  DecoderStep step(p, latent);
  LstmState state = step.initial();
  const auto seqs = pointers(batch);
  const std::size_t steps = max_length(seqs) + 1;
  TokenLoss loss;
  for (std::size_t t = 0; t < steps; ++t) {
    TokenIds prev;
    std::vector<int> targets;
    std::vector<bool> live;
    for (const TokenIds* s : seqs) {
      prev.push_back(t == 0 ? Vocab::kBos : (t - 1 < s->size() ? (*s)[t - 1] : Vocab::kPad));
      targets.push_back(t < s->size() ? (*s)[t] : (t == s->size() ? Vocab::kEos : -1));
      live.push_back(t <= s->size());
    }
    const Var logits = step(gather(step.table, prev), state, &live);
    loss.add(logits, targets);
  }
  return loss.finish();
}

TokenMask trigger_mask(const TokenMask& allowed) {
  TokenMask mask = allowed;
  for (std::size_t i = 0; i < std::min(mask.size(), Vocab::kNumSpecial); ++i) mask[i] = false;
  require(std::any_of(mask.begin(), mask.end(), [](bool b) { return b; }), "trigger mask admits no token");
  return mask;
}

std::vector<GumbelSample> decode_soft(const Bound& p, Var latent, int length, double tau, Rng& rng,
                                      const TokenMask& allowed, bool hard) {
  return decode_soft_impl(p, latent, length, tau, &rng, allowed, hard);
}

std::vector<GumbelSample> decode_soft_noiseless(const Bound& p, Var latent, int length, double tau,
                                                const TokenMask& allowed, bool hard) {
  return decode_soft_impl(p, latent, length, tau, nullptr, allowed, hard);
}

TokenIds decode_greedy(const ARAEModel& model, const Tensor& latent, int length, const TokenMask& allowed) {
  require(length >= 1, "decode_greedy: length must be >= 1");
  require(latent.rows() == 1 && latent.cols() == model.dims.latent, "decode_greedy: latent shape mismatch");
  const TokenMask mask = trigger_mask(allowed);
  require(mask.size() == model.vocab.size(), "decode_greedy: mask size differs from vocabulary");
  Graph g;
  const Bound p(g, model.params, false);
  DecoderStep step(p, g.constant_ref(latent));
  LstmState state = step.initial();
  TokenIds prev{Vocab::kBos};
  TokenIds out;
  for (int t = 0; t < length; ++t) {
    const Var logits = mask_columns(step(gather(step.table, prev), state), mask);
    prev[0] = static_cast<TokenId>(argmax(logits.value().row(0)));
    out.push_back(prev[0]);
  }
  return out;
}

TokenIds decode_sentence(const ARAEModel& model, const Tensor& latent, int max_length) {
  TokenMask mask(model.vocab.size(), true);
  for (TokenId s : {Vocab::kPad, Vocab::kUnk, Vocab::kBos}) mask[static_cast<std::size_t>(s)] = false;
  Graph g;
  const Bound p(g, model.params, false);
  DecoderStep step(p, g.constant_ref(latent));
  LstmState state = step.initial();
  TokenIds prev{Vocab::kBos};
  TokenIds out;
  for (int t = 0; t < max_length; ++t) {
    const Var logits = mask_columns(step(gather(step.table, prev), state), mask);
    prev[0] = static_cast<TokenId>(argmax(logits.value().row(0)));
    if (prev[0] == Vocab::kEos) break;
    out.push_back(prev[0]);
  }
  return out;
}

// --- victim classifiers ---------------------------------------------------

VictimArch parse_arch(const std::string& name) {
  if (name == "lstm2") return VictimArch::kLstm2;
  if (name == "bag") return VictimArch::kBag;
  if (name == "pair") return VictimArch::kPair;
  throw ContractViolation("unknown classifier architecture '" + name + "' (expected lstm2|bag|pair)");
}

std::string arch_name(VictimArch arch) {
  switch (arch) {
    case VictimArch::kLstm2: return "lstm2";
    case VictimArch::kBag: return "bag";
    case VictimArch::kPair: return "pair";
  }
  return "?";
}

VictimClassifier init_victim(Vocab vocab, VictimArch arch, const VictimDims& dims, int classes, std::uint64_t seed) {
  require(classes >= 2, "init_victim: need at least two classes");
  Rng rng(seed);
  VictimClassifier m{std::move(vocab), arch, dims, classes, {}, seed};
  init_embedding(m.params, "emb", static_cast<Index>(m.vocab.size()), dims.embed, rng);
  switch (arch) {
    case VictimArch::kLstm2:
      init_lstm(m.params, "l1", dims.embed, dims.hidden, rng);
      init_lstm(m.params, "l2", dims.hidden, dims.hidden, rng);
      init_linear(m.params, "head", dims.hidden, classes, rng);
      break;
    case VictimArch::kBag:
      init_linear(m.params, "ff", dims.embed, dims.ff_hidden, rng);
      init_linear(m.params, "head", dims.ff_hidden, classes, rng);
      break;
    case VictimArch::kPair:
      init_lstm(m.params, "enc", dims.embed, dims.hidden, rng);
      init_linear(m.params, "ff", 4 * dims.hidden, dims.ff_hidden, rng);
      init_linear(m.params, "head", dims.ff_hidden, classes, rng);
      break;
  }
  round_to_storage_precision(m.params);
  return m;
}

namespace {

Var classify_embedded(const VictimClassifier& model, const Bound& p, const std::vector<Var>& trigger,
                      std::span<const Example> batch) {
  require(!batch.empty(), "classify: empty batch");
  Graph& g = p.graph();
  const auto rows = static_cast<Index>(batch.size());
  std::vector<const TokenIds*> texts;
  for (const auto& ex : batch) {
    require(!ex.text.empty(), "classify: empty benign input");
    require(ex.is_pair() == (model.arch == VictimArch::kPair),
            "classify: example kind does not match the " + arch_name(model.arch) + " architecture");
    texts.push_back(&ex.text);
  }
  const Var table = p["emb"];

  switch (model.arch) {
    case VictimArch::kLstm2: {
      const LstmWeights w1 = lstm_weights(p, "l1");
      const LstmWeights w2 = lstm_weights(p, "l2");
      LstmState s1 = lstm_zero_state(g, 1, w1.hidden);
      LstmState s2 = lstm_zero_state(g, 1, w2.hidden);
      for (const Var& e : trigger) {
        s1 = lstm_step(w1, e, s1);
        s2 = lstm_step(w2, s1.h, s2);
      }
      s1 = repeat_state(s1, rows);
      s2 = repeat_state(s2, rows);
      const std::size_t steps = max_length(texts);
      for (std::size_t t = 0; t < steps; ++t) {
        const Column col = column_at(texts, t);
        s1 = lstm_step_masked(w1, gather(table, col.ids), s1, col.live);
        s2 = lstm_step_masked(w2, s1.h, s2, col.live);
      }
      return linear(p, "head", s2.h);
    }
    case VictimArch::kBag: {
      Tensor counts = Tensor::Zero(rows, table.rows());
      Eigen::VectorXd inverse_len(rows);
      for (Index r = 0; r < rows; ++r) {
        for (TokenId id : *texts[static_cast<std::size_t>(r)]) counts(r, id) += 1.0;
        inverse_len(r) = 1.0 / static_cast<double>(texts[static_cast<std::size_t>(r)]->size() + trigger.size());
      }
      Var total = matmul(g.constant(std::move(counts)), table);
      if (!trigger.empty()) {
        Var trig = trigger.front();
        for (std::size_t i = 1; i < trigger.size(); ++i) trig = trig + trigger[i];
        total = total + repeat_rows(trig, rows);
      }
      const Var h = tanh(linear(p, "ff", scale_rows(total, inverse_len)));
      return linear(p, "head", h);
    }
    case VictimArch::kPair: {
      const LstmWeights w = lstm_weights(p, "enc");
      std::vector<const TokenIds*> premises;
      for (const auto& ex : batch) premises.push_back(&ex.premise);
      const LstmState prem = run_masked(w, table, premises, lstm_zero_state(g, rows, w.hidden));
      LstmState hyp = lstm_zero_state(g, 1, w.hidden);
      for (const Var& e : trigger) hyp = lstm_step(w, e, hyp);
      hyp = run_masked(w, table, texts, repeat_state(hyp, rows));
      const Var features[] = {prem.h, hyp.h, abs(prem.h - hyp.h), prem.h * hyp.h};
      const Var h = tanh(linear(p, "ff", concat_cols(features)));
      return linear(p, "head", h);
    }
  }
  throw ContractViolation("classify: unknown architecture");
}

}  // namespace

Var classify(const VictimClassifier& model, const Bound& p, std::span<const Var> trigger,
             std::span<const Example> batch) {
  const Var table = p["emb"];
  std::vector<Var> embedded;
  for (const Var& row : trigger) {
    require(row.rows() == 1 && row.cols() == table.rows(), "classify: trigger rows must be 1 x |vocab|");
    embedded.push_back(matmul(row, table));
  }
  return classify_embedded(model, p, embedded, batch);
}

Var classify(const VictimClassifier& model, const Bound& p, const TokenIds& trigger, std::span<const Example> batch) {
  const Var table = p["emb"];
  std::vector<Var> embedded;
  for (TokenId id : trigger) {
    const TokenId one[] = {id};
    embedded.push_back(gather(table, one));
  }
  return classify_embedded(model, p, embedded, batch);
}

std::vector<int> predict(const VictimClassifier& model, const TokenIds& trigger, std::span<const Example> batch) {
  constexpr std::size_t kChunk = 64;
  std::vector<int> out;
  out.reserve(batch.size());
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    Graph g;
    const Bound p(g, model.params, false);
    const Var logits = classify(model, p, trigger, batch.subspan(start, std::min(kChunk, batch.size() - start)));
    for (Index r = 0; r < logits.rows(); ++r) out.push_back(static_cast<int>(argmax(logits.value().row(r))));
  }
  return out;
}

// --- scoring LM ------------------------------------------------------------

ScoringLM init_lm(Vocab vocab, const LmDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  ScoringLM m{std::move(vocab), dims, {}, seed};
  const auto v = static_cast<Index>(m.vocab.size());
  init_embedding(m.params, "emb", v, dims.embed, rng);
  init_lstm(m.params, "lstm", dims.embed, dims.hidden, rng);
  m.params["out.W"] = Tensor::Zero(dims.hidden, v);
  m.params["out.b"] = Tensor::Zero(1, v);
  round_to_storage_precision(m.params);
  return m;
}

Var lm_loss(const Bound& p, const std::vector<TokenIds>& batch, bool with_eos) {
  require(!batch.empty(), "lm_loss: empty batch");
  const LstmWeights w = lstm_weights(p, "lstm");
  const Var table = p["emb"];
  const auto seqs = pointers(batch);
  const std::size_t steps = max_length(seqs) + (with_eos ? 1 : 0);
  LstmState state = lstm_zero_state(p.graph(), static_cast<Index>(batch.size()), w.hidden);
  TokenLoss loss;
  for (std::size_t t = 0; t < steps; ++t) {
    TokenIds prev;
    std::vector<int> targets;
    std::vector<bool> live;
    for (const TokenIds* s : seqs) {
      prev.push_back(t == 0 ? Vocab::kBos : (t - 1 < s->size() ? (*s)[t - 1] : Vocab::kPad));
      const bool eos = with_eos && t == s->size();
      targets.push_back(t < s->size() ? (*s)[t] : (eos ? Vocab::kEos : -1));
      live.push_back(t < s->size() || eos);
    }
    state = lstm_step_masked(w, gather(table, prev), state, live);
    loss.add(linear(p, "out", state.h), targets);
  }
  return loss.finish().loss;
}

double lm_avg_ce(const ScoringLM& model, const TokenIds& tokens) {
  require(!tokens.empty(), "lm_avg_ce: needs at least one token");
  Graph g;
  const Bound p(g, model.params, false);
  return lm_loss(p, {tokens}, false).item();
}

double lm_avg_ce(const ScoringLM& model, const Tokens& tokens) { return lm_avg_ce(model, model.vocab.encode(tokens)); }

}  // namespace nuts

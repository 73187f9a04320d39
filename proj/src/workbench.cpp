// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/workbench.hpp"

#include "nuts/metrics.hpp"

#include <fstream>
#include <sstream>

namespace nuts {

namespace fs = std::filesystem;

namespace {

fs::path data_dir(const RunConfig& cfg) { return fs::path(cfg.str("data.dir")); }

int positive_int(const RunConfig& cfg, const std::string& key, bool allow_zero = false) {
  const long long v = cfg.integer(key);
  if (v < (allow_zero ? 0 : 1) || v > 1'000'000'000) {
    throw ConfigError("config key '" + key + "' must be " + (allow_zero ? ">= 0" : ">= 1"));
  }
  return static_cast<int>(v);
}

Index dim(const RunConfig& cfg, const std::string& key) { return static_cast<Index>(positive_int(cfg, key)); }

}  // namespace

Split make_synth(const RunConfig& cfg) {
  const Task task = parse_task(cfg.str("task"));
  SizeSpec sizes;
  sizes.train = static_cast<std::size_t>(positive_int(cfg, "data.train_size"));
  sizes.dev = static_cast<std::size_t>(positive_int(cfg, "data.dev_size"));
  sizes.test = static_cast<std::size_t>(positive_int(cfg, "data.test_size"));
  Split split = make_synthetic(task, cfg.u64("data.seed"), sizes);
  const fs::path dir = data_dir(cfg);
  fs::create_directories(dir);
  write_corpus(dir / "train.tsv", split.train);
  write_corpus(dir / "dev.tsv", split.dev);
  write_corpus(dir / "test.tsv", split.test);
  write_lexicon(dir / "lexicon.txt", synthetic_lexicon(task));
  return split;
}

Corpus load_corpus(const RunConfig& cfg) {
  Corpus c;
  c.task = parse_task(cfg.str("task"));
  const fs::path dir = data_dir(cfg);
  c.raw.train = read_corpus(dir / "train.tsv");
  c.raw.dev = read_corpus(dir / "dev.tsv");
  c.raw.test = read_corpus(dir / "test.tsv");
  c.vocab = build_vocab(c.raw.train, static_cast<std::size_t>(positive_int(cfg, "data.min_freq")));
  c.train = encode(c.vocab, c.raw.train);
  c.dev = encode(c.vocab, c.raw.dev);
  c.test = encode(c.vocab, c.raw.test);
  return c;
}

void encode_for(Corpus& corpus, const Vocab& vocab) {
  corpus.dev = encode(vocab, corpus.raw.dev);
  corpus.test = encode(vocab, corpus.raw.test);
}

std::vector<TokenIds> text_sequences(const std::vector<Example>& examples) {
  std::vector<TokenIds> out;
  for (const auto& e : examples) {
    if (e.is_pair()) out.push_back(e.premise);
    out.push_back(e.text);
  }
  return out;
}

std::vector<Example> class_subset(const std::vector<Example>& examples, int y) {
  std::vector<Example> out;
  for (const auto& e : examples) {
    if (e.label == y) out.push_back(e);
  }
  return out;
}

TrainConfig train_config(const RunConfig& cfg, const std::string& section) {
  const std::string p = section + ".";
  TrainConfig t;
  t.epochs = positive_int(cfg, p + "epochs", true);
  t.batch_size = positive_int(cfg, p + "batch_size");
  t.learning_rate = cfg.real(p + "lr");
  t.momentum = cfg.real(p + "momentum");
  t.clip_norm = cfg.real(p + "clip");
  t.seed = cfg.u64(p + "seed");
  if (section == "arae") {
    t.critic_steps = positive_int(cfg, "arae.critic_steps");
    t.gp_weight = cfg.real("arae.gp_weight");
    t.critic_learning_rate = cfg.real("arae.critic_lr");
    t.gen_learning_rate = cfg.real("arae.gen_lr");
    t.adv_weight = cfg.real("arae.adv_weight");
    t.latent_noise = cfg.real("arae.latent_noise");
  }
  return t;
}

AraeDims arae_dims(const RunConfig& cfg) {
  AraeDims d;
  d.noise = dim(cfg, "arae.noise_dim");
  d.latent = dim(cfg, "arae.latent_dim");
  d.hidden = dim(cfg, "arae.hidden");
  d.embed = dim(cfg, "arae.embed");
  return d;
}

VictimDims victim_dims(const RunConfig& cfg) {
  VictimDims d;
  d.embed = dim(cfg, "clf.embed");
  d.hidden = dim(cfg, "clf.hidden");
  d.ff_hidden = dim(cfg, "clf.ff_hidden");
  return d;
}

LmDims lm_dims(const RunConfig& cfg) {
  LmDims d;
  d.embed = dim(cfg, "lm.embed");
  d.hidden = dim(cfg, "lm.hidden");
  return d;
}

AttackConfig attack_config(const RunConfig& cfg) {
  AttackConfig a;
  a.eps = cfg.real("attack.eps");
  a.eta = cfg.real("attack.eta");
  a.steps = positive_int(cfg, "attack.steps", true);
  a.n_inits = positive_int(cfg, "attack.n_inits");
  a.lambda = cfg.real("attack.lambda");
  a.trigger_length = positive_int(cfg, "attack.length");
  a.tau_start = cfg.real("attack.tau_start");
  a.tau_end = cfg.real("attack.tau_end");
  a.batch_size = positive_int(cfg, "attack.batch_size");
  a.attacked_class = positive_int(cfg, "attack.class", true);
  a.seed = cfg.u64("attack.seed");
  a.normalize_gradient = cfg.flag("attack.normalize_gradient");
  a.straight_through = cfg.flag("attack.straight_through");
  a.threads = positive_int(cfg, "threads", true);
  return a;
}

TokenGradientConfig token_gradient_config(const RunConfig& cfg) {
  TokenGradientConfig t;
  t.beam_width = positive_int(cfg, "baseline.beam");
  t.top_k = positive_int(cfg, "baseline.top_k");
  t.filler = cfg.str("baseline.filler");
  t.max_sweeps = positive_int(cfg, "baseline.max_sweeps");
  return t;
}

std::set<std::string> exclusion_lexicon(const RunConfig& cfg) {
  const std::string& explicit_path = cfg.str("lexicon");
  if (!explicit_path.empty()) return read_lexicon(explicit_path);
  const fs::path fallback = data_dir(cfg) / "lexicon.txt";
  if (fs::exists(fallback)) return read_lexicon(fallback);
  return {};
}

void validate_config(const RunConfig& cfg) {
  try {
    const Task task = parse_task(cfg.str("task"));
    parse_arch(cfg.str("clf.arch"));
    positive_int(cfg, "data.min_freq");
    for (const char* s : {"arae", "clf", "lm"}) train_config(cfg, s).validate();
    arae_dims(cfg);
    victim_dims(cfg);
    lm_dims(cfg);
    const AttackConfig a = attack_config(cfg);
    a.validate();
    if (a.attacked_class >= task_classes(task)) {
      throw ConfigError("attack.class must be below the task's class count " + std::to_string(task_classes(task)));
    }
    token_gradient_config(cfg);
    const std::string& kind = cfg.str("baseline.kind");
    if (kind != "token-gradient" && kind != "random-arae" && kind != "random-seq") {
      throw ConfigError("baseline.kind must be token-gradient, random-arae or random-seq");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

fs::path metrics_log_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".metrics.jsonl";
  return p;
}

fs::path candidates_path(const RunConfig& cfg, const std::string& kind) {
  return fs::path(cfg.str("attack.out_dir")) / (kind + ".candidates.jsonl");
}

fs::path selected_path(const RunConfig& cfg, const std::string& kind) {
  return fs::path(cfg.str("attack.out_dir")) / (kind + ".selected.json");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  write_text(path, text);
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<nlohmann::json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json write_attack_outputs(const RunConfig& cfg, const std::string& kind, const AttackResult& result,
                                    const VictimClassifier& victim, const Corpus& corpus) {
  const std::string hash = cfg.hash();
  const int y = static_cast<int>(cfg.integer("attack.class"));
  std::vector<nlohmann::json> lines;
  for (const auto& c : result.candidates) {
    nlohmann::json j = candidate_json(c, kind);
    j["config_hash"] = hash;
    lines.push_back(std::move(j));
  }
  write_jsonl(candidates_path(cfg, kind), lines);

  nlohmann::json sel = candidate_json(result.selected, kind);
  sel["attacked_class"] = y;
  sel["task"] = task_name(corpus.task);
  sel["clean_dev"] = accuracy_under_trigger(victim, corpus.dev, TokenIds{}, y);
  sel["clean_test"] = accuracy_under_trigger(victim, corpus.test, TokenIds{}, y);
  sel["m1_test"] = accuracy_under_trigger(victim, corpus.test, result.selected.tokens, y);
  sel["config_hash"] = hash;
  write_text(selected_path(cfg, kind), sel.dump(2) + "\n");
  return sel;
}

std::vector<TriggerCandidate> read_candidates(const fs::path& path) {
  std::vector<TriggerCandidate> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      TriggerCandidate c;
      c.init_seed = j.at("init_seed").get<std::uint64_t>();
      c.tokens = j.at("tokens").get<Tokens>();
      c.m1 = j.at("m1_dev").get<double>();
      c.m2 = j.at("m2").get<double>();
      c.score = j.at("score").get<double>();
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ": malformed candidate record: " + e.what());
    }
  }
  return out;
}

}  // namespace nuts

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/cli.hpp"

#include "nuts/checkpoint.hpp"
#include "nuts/metrics.hpp"
#include "nuts/workbench.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace nuts {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void log(const std::string& msg) { std::cerr << "[nuts] " << msg << "\n"; }

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

/// Streams epoch records to stderr and collects them for the metrics log.
struct EpochLog {
  std::string hash;
  std::vector<nlohmann::json> records;

  EpochCallback callback() {
    return [this](const nlohmann::json& rec) {
      nlohmann::json r = rec;
      r["config_hash"] = hash;
      log(r.dump());
      records.push_back(std::move(r));
    };
  }

  void finish(const fs::path& checkpoint, nlohmann::json summary) {
    summary["config_hash"] = hash;
    summary["final"] = true;
    log(summary.dump());
    records.push_back(std::move(summary));
    write_jsonl(metrics_log_path(checkpoint), records);
  }
};

// --- subcommands -------------------------------------------------------------

void cmd_make_synth(const RunConfig& cfg) {
  const Split s = make_synth(cfg);
  log("wrote " + std::to_string(s.train.size()) + "/" + std::to_string(s.dev.size()) + "/" +
      std::to_string(s.test.size()) + " train/dev/test examples to " + cfg.str("data.dir"));
}

void cmd_train_arae(const RunConfig& cfg) {
  const Corpus c = load_corpus(cfg);
  const std::vector<TokenIds> seqs = text_sequences(c.train);
  const fs::path path = cfg.str("arae.path");
  ensure_parent(path);
  EpochLog elog{cfg.hash(), {}};
  AraeTraining r = train_arae(seqs, c.vocab, arae_dims(cfg), train_config(cfg, "arae"), elog.callback());
  write_checkpoint(path, to_checkpoint(r.model, cfg.hash()));
  elog.finish(path, {{"trainer", "arae"}, {"recon_acc_train", reconstruction_accuracy(r.model, seqs)}});
  log("wrote " + path.string());
}

void cmd_train_classifier(const RunConfig& cfg) {
  const Corpus c = load_corpus(cfg);
  const fs::path path = cfg.str("clf.path");
  ensure_parent(path);
  EpochLog elog{cfg.hash(), {}};
  const VictimArch arch = parse_arch(cfg.str("clf.arch"));
  ClassifierTraining r = train_classifier(c.train, c.dev, c.vocab, arch, victim_dims(cfg), task_classes(c.task),
                                          train_config(cfg, "clf"), elog.callback());
  write_checkpoint(path, to_checkpoint(r.model, cfg.hash()));
  elog.finish(path, {{"trainer", "classifier"}, {"arch", arch_name(arch)}, {"dev_acc", r.dev_accuracy},
                     {"test_acc", clean_accuracy(r.model, c.test)}});
  log("wrote " + path.string());
}

void cmd_train_lm(const RunConfig& cfg) {
  const Corpus c = load_corpus(cfg);
  const fs::path path = cfg.str("lm.path");
  ensure_parent(path);
  EpochLog elog{cfg.hash(), {}};
  LmTraining r =
      train_lm(text_sequences(c.train), text_sequences(c.dev), c.vocab, lm_dims(cfg), train_config(cfg, "lm"),
               elog.callback());
  write_checkpoint(path, to_checkpoint(r.model, cfg.hash()));
  elog.finish(path, {{"trainer", "lm"}, {"dev_ce", r.dev_ce}, {"uniform_ce", std::log(double(c.vocab.size()))}});
  log("wrote " + path.string());
}

void report_selection(const std::string& kind, const nlohmann::json& sel, double seconds) {
  log(kind + " selected [" + detokenize(sel.at("tokens").get<Tokens>()) + "]  m1_dev " +
      fixed(sel.at("m1_dev").get<double>()) + "  m1_test " + fixed(sel.at("m1_test").get<double>()) + "  clean_test " +
      fixed(sel.at("clean_test").get<double>()) + "  m2 " + fixed(sel.at("m2").get<double>()) + "  (" +
      fixed(seconds, 1) + " s)");
}

void run_attack(const RunConfig& cfg, const std::string& kind) {
  Stopwatch clock;
  Corpus c = load_corpus(cfg);
  const ARAEModel arae = load_arae(cfg.str("arae.path"));
  const VictimClassifier victim = load_victim(cfg.str("clf.path"));
  const ScoringLM lm = load_lm(cfg.str("lm.path"));
  encode_for(c, victim.vocab);
  const AttackConfig ac = attack_config(cfg);
  const AttackModels models = make_attack_models(arae, victim, lm, exclusion_lexicon(cfg));
  const std::vector<Example> subset = class_subset(c.dev, ac.attacked_class);
  if (subset.empty()) throw std::runtime_error("dev split holds no examples of class " + std::to_string(ac.attacked_class));
  const int count = kind == "token-gradient" ? 1 : ac.n_inits;
  log(kind + ": " + std::to_string(count) + (count == 1 ? " candidate" : " candidates") + " over " +
      std::to_string(subset.size()) + " class-" + std::to_string(ac.attacked_class) + " dev examples");

  AttackResult result;
  if (kind == "nuts") {
    result = nuts_attack(models, subset, ac);
  } else if (kind == "token-gradient") {
    result = token_gradient_attack(models, subset, ac, token_gradient_config(cfg));
  } else if (kind == "random-arae") {
    result = random_arae_attack(models, subset, ac);
  } else {
    result = random_sequence_attack(models, subset, ac);
  }
  const nlohmann::json sel = write_attack_outputs(cfg, kind, result, victim, c);
  report_selection(kind, sel, clock.seconds());
  log("wrote " + candidates_path(cfg, kind).string() + " and " + selected_path(cfg, kind).string());
}

nlohmann::json read_selected(const RunConfig& cfg) {
  const std::string& given = cfg.str("eval.trigger");
  const fs::path path = given.empty() ? selected_path(cfg, "nuts") : fs::path(given);
  nlohmann::json j = nlohmann::json::parse(read_text(path));
  if (!j.contains("tokens") || !j.contains("kind") || !j.contains("attacked_class")) {
    throw std::runtime_error(path.string() + " is not a selected-trigger record");
  }
  return j;
}

void cmd_evaluate(const RunConfig& cfg) {
  Corpus c = load_corpus(cfg);
  const nlohmann::json sel = read_selected(cfg);
  const VictimClassifier victim = load_victim(cfg.str("clf.path"));
  const ScoringLM lm = load_lm(cfg.str("lm.path"));
  encode_for(c, victim.vocab);
  const std::string kind = sel.at("kind").get<std::string>();
  const int y = sel.at("attacked_class").get<int>();
  EvalReport report = evaluate_trigger(task_name(c.task), kind, sel.at("tokens").get<Tokens>(), y, victim, lm,
                                       victim.vocab, c.dev, c.test);

  if (const std::string& cmd = cfg.str("eval.grammar_cmd"); !cmd.empty()) {
    std::vector<std::string> sentences{detokenize(report.trigger)};
    for (const auto& raw : filter_label(c.raw.test, y)) sentences.push_back(detokenize(raw.text));
    const std::vector<int> errors = run_grammar_checker(cmd, sentences);
    report.grammar_errors = errors.front();
    double benign = 0.0;
    for (std::size_t i = 1; i < errors.size(); ++i) benign += errors[i];
    report.benign_grammar_errors = benign / static_cast<double>(errors.size() - 1);
  }

  nlohmann::json j = to_json(report);
  j["config_hash"] = cfg.hash();
  const fs::path out = fs::path(cfg.str("attack.out_dir")) / (kind + ".report");
  write_text(fs::path(out).concat(".json"), j.dump(2) + "\n");
  const std::string text = to_text(report) + "config hash     " + cfg.hash() + "\n";
  write_text(fs::path(out).concat(".txt"), text);
  std::cerr << text;
  log("wrote " + out.string() + ".{json,txt}");
}

void cmd_transfer(const RunConfig& cfg) {
  Corpus c = load_corpus(cfg);
  const nlohmann::json sel = read_selected(cfg);
  const VictimClassifier target = load_victim(cfg.str("transfer.target"));
  encode_for(c, target.vocab);
  const std::string kind = sel.at("kind").get<std::string>();
  const int y = sel.at("attacked_class").get<int>();
  const Tokens trigger = sel.at("tokens").get<Tokens>();
  const TransferResult r = transfer_eval(trigger, target, c.test, y);
  if (!r.oov.empty()) {
    std::string words;
    for (const auto& w : r.oov) words += " " + w;
    log("warning: trigger words unknown to the target, scored as UNK:" + words);
  }
  const nlohmann::json j = {{"kind", kind},
                            {"tokens", trigger},
                            {"attacked_class", y},
                            {"target", cfg.str("transfer.target")},
                            {"target_arch", arch_name(target.arch)},
                            {"clean", r.clean},
                            {"attacked", r.attacked},
                            {"drop", r.drop},
                            {"oov", r.oov},
                            {"config_hash", cfg.hash()}};
  const fs::path out = fs::path(cfg.str("attack.out_dir")) / (kind + ".transfer.json");
  write_text(out, j.dump(2) + "\n");
  log("transfer to " + arch_name(target.arch) + ": clean " + fixed(r.clean) + "  attacked " + fixed(r.attacked) +
      "  drop " + fixed(r.drop));
  log("wrote " + out.string());
}

void cmd_stats(const RunConfig& cfg) {
  const std::string& given = cfg.str("stats.candidates");
  const fs::path in = given.empty() ? candidates_path(cfg, "nuts") : fs::path(given);
  const std::vector<TriggerCandidate> cands = read_candidates(in);
  if (cands.size() < 2) throw std::runtime_error("stats needs at least two candidates, " + in.string() + " has " +
                                                 std::to_string(cands.size()));
  nlohmann::json j = to_json(candidate_stats(cands));
  j["source"] = in.string();
  j["config_hash"] = cfg.hash();
  std::string name = in.filename().string();
  if (const auto pos = name.find(".candidates.jsonl"); pos != std::string::npos) name.erase(pos);
  const fs::path out = in.parent_path() / (name + ".stats.json");
  write_text(out, j.dump(2) + "\n");
  log(j.dump());
  log("wrote " + out.string());
}

// --- dispatch ----------------------------------------------------------------

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> keys;  ///< exact keys or "group." prefixes exposed as flags
  std::function<void(const RunConfig&)> run;
};

bool exposes(const Command& cmd, const std::string& key) {
  for (const auto& k : cmd.keys) {
    if (k == key || (k.back() == '.' && key.rfind(k, 0) == 0)) return true;
  }
  return false;
}

std::vector<Command> commands() {
  const std::vector<std::string> data = {"task", "data."};
  auto with = [&](std::vector<std::string> extra) {
    extra.insert(extra.begin(), data.begin(), data.end());
    return extra;
  };
  const std::vector<std::string> attack_keys = {"threads", "lexicon", "arae.path", "clf.path", "lm.path", "attack."};
  std::vector<std::string> baseline_keys = attack_keys;
  baseline_keys.push_back("baseline.");
  return {
      {"make-synth", "Generate the synthetic corpus and lexicon", with({}), cmd_make_synth},
      {"train-arae", "Train the ARAE on the training texts", with({"arae."}), cmd_train_arae},
      {"train-classifier", "Train a victim classifier", with({"clf."}), cmd_train_classifier},
      {"train-lm", "Train the scoring language model", with({"lm."}), cmd_train_lm},
      {"attack", "Run the NUTS attack", with(attack_keys), [](const RunConfig& c) { run_attack(c, "nuts"); }},
      {"attack-baseline", "Run a baseline attack (--kind token-gradient|random-arae|random-seq)",
       with(baseline_keys), [](const RunConfig& c) { run_attack(c, c.str("baseline.kind")); }},
      {"evaluate", "Evaluate a selected trigger on dev and test",
       with({"clf.path", "lm.path", "attack.out_dir", "eval."}), cmd_evaluate},
      {"transfer", "Apply a selected trigger to another classifier",
       with({"attack.out_dir", "eval.trigger", "transfer."}), cmd_transfer},
      {"stats", "Population statistics of a candidate dump", {"attack.out_dir", "stats."}, cmd_stats},
  };
}

std::string type_name(ConfigType t) {
  switch (t) {
    case ConfigType::kInt: return "INT";
    case ConfigType::kFloat: return "FLOAT";
    case ConfigType::kBool: return "BOOL";
    case ConfigType::kString: break;
  }
  return "TEXT";
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  const std::vector<Command> cmds = commands();

  CLI::App app{"NUTS workbench: natural universal trigger search on toy text classifiers", "nuts"};
  app.require_subcommand(1);

  struct Bound {
    CLI::App* sub;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    CLI::Option* kind = nullptr;
    std::string kind_value;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Bound& b = bound[i];
    b.sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    b.sub->add_option("--config", b.config_path, "config file of `key = value` lines");
    for (const auto& key : config_schema()) {
      if (!exposes(cmds[i], key.name)) continue;
      std::string help = key.help.empty() ? key.name : key.help;
      help += " [" + (key.default_value.empty() ? std::string("\"\"") : key.default_value) + "]";
      b.options[key.name] = b.sub->add_option("--" + key.name, b.values[key.name], help)->type_name(type_name(key.type));
    }
    if (cmds[i].name == "attack-baseline") {
      b.kind = b.sub->add_option("--kind", b.kind_value, "alias of --baseline.kind");
    }
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::size_t which = 0;
  while (which < bound.size() && !bound[which].sub->parsed()) ++which;
  if (which == bound.size()) return kExitUsage;
  const Bound& b = bound[which];
  const Command& cmd = cmds[which];

  RunConfig cfg;
  try {
    if (!b.config_path.empty()) cfg.merge_file(b.config_path);
    for (const auto& [key, opt] : b.options) {
      if (opt->count() > 0) cfg.set(key, b.values.at(key));
    }
    if (b.kind && b.kind->count() > 0) cfg.set("baseline.kind", b.kind_value);
    validate_config(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "nuts " << cmd.name << ": " << e.what() << "\n";
    return kExitUsage;
  }

  log(cmd.name + " config " + cfg.hash() + " " + cfg.to_json().dump());
  try {
    cmd.run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "nuts " << cmd.name << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace nuts

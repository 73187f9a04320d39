// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nuts {

namespace {

using T = ConfigType;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

template <typename Num>
bool parse_number(const std::string& v, Num& out) {
  const char* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"task", T::kString, "sentiment", "sentiment | nli"},
      {"threads", T::kInt, "0", "worker threads for attack candidates (0 = all cores)"},

      {"data.dir", T::kString, "data", "directory holding train.tsv, dev.tsv, test.tsv"},
      {"data.seed", T::kInt, "7", "seed of the synthetic corpus"},
      {"data.train_size", T::kInt, "3000", "synthetic training examples"},
      {"data.dev_size", T::kInt, "400", "synthetic dev examples"},
      {"data.test_size", T::kInt, "400", "synthetic test examples"},
      {"data.min_freq", T::kInt, "1", "minimum count for a vocabulary entry"},
      {"lexicon", T::kString, "", "excluded trigger words; empty = <data.dir>/lexicon.txt when present"},

      {"arae.path", T::kString, "models/arae.ckpt", "ARAE checkpoint"},
      {"arae.epochs", T::kInt, "30", ""},
      {"arae.batch_size", T::kInt, "16", ""},
      {"arae.lr", T::kFloat, "0.5", "autoencoder learning rate"},
      {"arae.momentum", T::kFloat, "0.9", ""},
      {"arae.clip", T::kFloat, "5", "gradient-norm clip"},
      {"arae.seed", T::kInt, "11", ""},
      {"arae.critic_steps", T::kInt, "5", "critic updates per batch"},
      {"arae.gp_weight", T::kFloat, "10", "gradient-penalty weight"},
      {"arae.critic_lr", T::kFloat, "0.05", ""},
      {"arae.gen_lr", T::kFloat, "0.05", "generator and encoder-adversary learning rate"},
      {"arae.adv_weight", T::kFloat, "0.1", "weight of the encoder's adversarial term"},
      {"arae.latent_noise", T::kFloat, "0.05", "std of code noise during reconstruction"},
      {"arae.noise_dim", T::kInt, "16", ""},
      {"arae.latent_dim", T::kInt, "32", ""},
      {"arae.hidden", T::kInt, "64", ""},
      {"arae.embed", T::kInt, "32", ""},

      {"clf.path", T::kString, "models/clf.ckpt", "victim classifier checkpoint"},
      {"clf.arch", T::kString, "lstm2", "lstm2 | bag | pair"},
      {"clf.epochs", T::kInt, "5", ""},
      {"clf.batch_size", T::kInt, "32", ""},
      {"clf.lr", T::kFloat, "0.5", ""},
      {"clf.momentum", T::kFloat, "0.9", ""},
      {"clf.clip", T::kFloat, "5", ""},
      {"clf.seed", T::kInt, "13", ""},
      {"clf.embed", T::kInt, "32", ""},
      {"clf.hidden", T::kInt, "48", ""},
      {"clf.ff_hidden", T::kInt, "48", ""},

      {"lm.path", T::kString, "models/lm.ckpt", "scoring LM checkpoint"},
      {"lm.epochs", T::kInt, "5", ""},
      {"lm.batch_size", T::kInt, "32", ""},
      {"lm.lr", T::kFloat, "0.5", ""},
      {"lm.momentum", T::kFloat, "0.9", ""},
      {"lm.clip", T::kFloat, "5", ""},
      {"lm.seed", T::kInt, "17", ""},
      {"lm.embed", T::kInt, "32", ""},
      {"lm.hidden", T::kInt, "64", ""},

      {"attack.eps", T::kFloat, "10", "l2 radius around the initial noise"},
      {"attack.eta", T::kFloat, "1000", "ascent step size"},
      {"attack.steps", T::kInt, "1000", "ascent steps per candidate"},
      {"attack.n_inits", T::kInt, "256", "independent initialisations (candidates)"},
      {"attack.lambda", T::kFloat, "0.05", "weight of m2 in the rerank score"},
      {"attack.length", T::kInt, "3", "trigger length"},
      {"attack.tau_start", T::kFloat, "1", "Gumbel temperature at the first step"},
      {"attack.tau_end", T::kFloat, "0.1", "Gumbel temperature at the last step"},
      {"attack.batch_size", T::kInt, "32", "benign examples per step"},
      {"attack.class", T::kInt, "1", "attacked class"},
      {"attack.seed", T::kInt, "1", "master seed of the candidate seeds"},
      {"attack.normalize_gradient", T::kBool, "false", "ascend along the unit gradient"},
      {"attack.straight_through", T::kBool, "true", "hard straight-through samples (false = soft relaxation)"},
      {"attack.out_dir", T::kString, "out", "directory for candidate dumps and selected triggers"},

      {"baseline.kind", T::kString, "token-gradient", "token-gradient | random-arae | random-seq"},
      {"baseline.beam", T::kInt, "3", "token-gradient beam width"},
      {"baseline.top_k", T::kInt, "20", "token-gradient replacements per position"},
      {"baseline.filler", T::kString, "the", "token-gradient initial token"},
      {"baseline.max_sweeps", T::kInt, "10", "token-gradient sweep cap"},

      {"eval.trigger", T::kString, "", "selected-trigger record; empty = <attack.out_dir>/nuts.selected.json"},
      {"eval.grammar_cmd", T::kString, "", "external grammar checker command (optional)"},
      {"transfer.target", T::kString, "models/bag.ckpt", "classifier the trigger is transferred to"},
      {"stats.candidates", T::kString, "", "candidate dump; empty = <attack.out_dir>/nuts.candidates.jsonl"},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

void RunConfig::check(const std::string& key, const std::string& value) const {
  const ConfigKey* k = find_key(key);
  if (!k) throw ConfigError("unknown config key '" + key + "'");
  bool b = false;
  long long i = 0;
  double d = 0.0;
  switch (k->type) {
    case T::kString: break;
    case T::kInt:
      if (!parse_number(value, i)) throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
      break;
    case T::kFloat:
      if (!parse_number(value, d)) throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
      break;
    case T::kBool:
      if (!parse_bool(value, b)) throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
      break;
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  check(key, value);
  values_[key] = value;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str(), path.string());
}

const std::string& RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::integer(const std::string& key) const {
  long long v = 0;
  if (!parse_number(str(key), v)) throw ConfigError("config key '" + key + "' is not an integer");
  return v;
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  const long long v = integer(key);
  if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

double RunConfig::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(str(key), v)) throw ConfigError("config key '" + key + "' is not a number");
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  bool v = false;
  if (!parse_bool(str(key), v)) throw ConfigError("config key '" + key + "' is not a boolean");
  return v;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const {
  std::string canon;
  for (const auto& [k, v] : values_) canon += k + "=" + v + "\n";
  return fnv1a_hex(canon);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

}  // namespace nuts

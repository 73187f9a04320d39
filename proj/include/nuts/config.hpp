// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_CONFIG_HPP
#define NUTS_CONFIG_HPP

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nuts {

/// Bad key, bad value or unreadable config file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConfigType { kString, kInt, kFloat, kBool };

struct ConfigKey {
  std::string name;
  ConfigType type;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its built-in default.
const std::vector<ConfigKey>& config_schema();

/// Flat key -> value map: built-in defaults, then a config file, then
/// command-line overrides. Unknown keys are rejected at every layer.
class RunConfig {
 public:
  RunConfig();

  /// Merges `key = value` lines (`#` comments, blank lines allowed).
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin = "<text>");
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& str(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// 16 hex digits of FNV-1a over the sorted `key=value` lines.
  std::string hash() const;
  nlohmann::json to_json() const;

 private:
  void check(const std::string& key, const std::string& value) const;
  std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& bytes);

}  // namespace nuts

#endif  // NUTS_CONFIG_HPP

// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace nuts;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "nuts");
  return cli_main(args);
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "nuts-cli-test";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}) == kExitOk);
  CHECK(run({"attack", "--help"}) == kExitOk);
  CHECK(run({}) == kExitUsage);
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({"attack", "--no-such-flag", "1"}) == kExitUsage);
  CHECK(run({"attack", "--attack.steps", "many"}) == kExitUsage);
  CHECK(run({"attack", "--config", "/nonexistent/x.conf"}) == kExitUsage);
  CHECK(run({"attack-baseline", "--kind", "psychic"}) == kExitUsage);
}

TEST_CASE("config file errors are usage errors") {
  const fs::path dir = scratch();
  std::ofstream(dir / "bad.conf") << "attack.bogus = 1\n";
  CHECK(run({"make-synth", "--config", (dir / "bad.conf").string()}) == kExitUsage);
  std::ofstream(dir / "cls.conf") << "attack.class = 5\n";
  CHECK(run({"attack", "--config", (dir / "cls.conf").string()}) == kExitUsage);
}

TEST_CASE("missing inputs are runtime errors") {
  const fs::path dir = scratch();
  const std::string data = (dir / "data").string();
  CHECK(run({"train-classifier", "--data.dir", data}) == kExitRuntime);
  CHECK(run({"make-synth", "--data.dir", data, "--data.train_size", "60", "--data.dev_size", "20",
             "--data.test_size", "20"}) == kExitOk);
  CHECK(fs::exists(dir / "data" / "train.tsv"));
  CHECK(run({"attack", "--data.dir", data, "--arae.path", (dir / "none.ckpt").string()}) == kExitRuntime);
  CHECK(run({"stats", "--stats.candidates", (dir / "none.jsonl").string()}) == kExitRuntime);
}

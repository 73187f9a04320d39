// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// One PASS/FAIL line per acceptance criterion. Property suites are run as the
// unit-test executables; trend criteria read the pipeline work directory
// (see run_pipeline.sh) and time fresh runs of the attack and transfer.
//
// usage: nuts_acceptance <work dir> <config>

#include "nuts/cli.hpp"
#include "nuts/workbench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::printf("%s  %-22s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << x;
  return s.str();
}

/// Runs doctest executables (each with optional filter args); all must pass in `limit` seconds.
Outcome suite(const std::vector<std::string>& commands, double limit) {
  bool ok = true;
  const double t = seconds([&] {
    for (const auto& cmd : commands) ok = ok && std::system((cmd + " > /dev/null 2>&1").c_str()) == 0;
  });
  Outcome o;
  o.pass = ok && t <= limit;
  o.detail = std::string(ok ? "suite passed" : "suite FAILED") + " in " + num(t, 1) + " s (limit " + num(limit, 0) +
             " s)";
  return o;
}

int cli(std::vector<std::string> args, const std::string& config) {
  args.insert(args.begin(), "nuts");
  args.push_back("--config");
  args.push_back(config);
  return nuts::cli_main(args);
}

json final_record(const fs::path& metrics) {
  const std::vector<json> lines = nuts::read_jsonl(metrics);
  if (lines.empty() || !lines.back().value("final", false)) throw std::runtime_error("no summary in " + metrics.string());
  return lines.back();
}

json read_json(const fs::path& p) { return json::parse(nuts::read_text(p)); }

void guarded(const std::string& name, const std::function<Outcome()>& body) {
  try {
    report(name, body());
  } catch (const std::exception& e) {
    report(name, {false, std::string("error: ") + e.what()});
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: nuts_acceptance <work dir> <config>\n";
    return 2;
  }
  const std::string config = fs::absolute(argv[2]).string();
  fs::current_path(argv[1]);
  const std::string bin = NUTS_TEST_BIN_DIR;

  guarded("gradient suite", [&] {
    return suite({bin + "/test_graph", bin + "/test_models", bin + "/test_attack -tc='soft trigger loss*'"}, 60.0);
  });
  guarded("projection suite", [&] { return suite({bin + "/test_projection"}, 10.0); });
  guarded("gumbel suite", [&] { return suite({bin + "/test_gumbel"}, 30.0); });
  guarded("rerank theorems", [&] { return suite({bin + "/test_candidate"}, 5.0); });

  // Fresh timed NUTS run over the pipeline's checkpoints; the previous dump is
  // kept for the byte-identity check.
  const fs::path dump = "out/nuts.candidates.jsonl";
  const std::string before = fs::exists(dump) ? nuts::read_text(dump) : std::string();
  int attack_status = -1;
  const double attack_seconds = seconds([&] { attack_status = cli({"attack"}, config); });

  guarded("end-to-end attack", [&] {
    if (attack_status != 0) return Outcome{false, "nuts attack exited " + std::to_string(attack_status)};
    const double dev_acc = final_record("models/clf.ckpt.metrics.jsonl").at("dev_acc").get<double>();
    const json sel = read_json("out/nuts.selected.json");
    const double clean = sel.at("clean_test").get<double>();
    const double m1 = sel.at("m1_test").get<double>();
    const bool ok = dev_acc >= 0.95 && m1 <= clean - 0.30 && attack_seconds <= 600.0;
    return Outcome{ok, "clean dev acc " + num(dev_acc) + ", class test acc " + num(clean) + " -> " + num(m1) +
                           " (drop " + num(clean - m1) + "), attack " + num(attack_seconds, 1) + " s"};
  });

  guarded("baseline ordering", [&] {
    const auto m1 = [](const std::string& kind) {
      return read_json("out/" + kind + ".selected.json").at("m1_dev").get<double>();
    };
    const double tg = m1("token-gradient"), nuts = m1("nuts"), ra = m1("random-arae"), rs = m1("random-seq");
    const bool ok = tg <= nuts && nuts <= ra && nuts <= rs;
    return Outcome{ok, "m1 token-gradient " + num(tg) + " <= nuts " + num(nuts) + " <= random-arae " + num(ra) +
                           ", nuts <= random-seq " + num(rs)};
  });

  guarded("naturalness ordering", [&] {
    const double nuts = read_json("out/nuts.selected.json").at("m2").get<double>();
    const double rs = read_json("out/random-seq.selected.json").at("m2").get<double>();
    return Outcome{nuts <= rs, "m2 nuts " + num(nuts) + " <= random-seq " + num(rs)};
  });

  guarded("dev/test consistency", [&] {
    const json sel = read_json("out/nuts.selected.json");
    const double gap = std::abs(sel.at("m1_dev").get<double>() - sel.at("m1_test").get<double>());
    return Outcome{gap <= 0.10, "|m1_dev - m1_test| = " + num(gap)};
  });

  guarded("transfer", [&] {
    int status = -1;
    const double t = seconds([&] { status = cli({"transfer"}, config); });
    if (status != 0) return Outcome{false, "nuts transfer exited " + std::to_string(status)};
    const json r = read_json("out/nuts.transfer.json");
    const double drop = r.at("drop").get<double>();
    return Outcome{drop >= 0.10 && t < 120.0, "lstm2 -> " + r.at("target_arch").get<std::string>() + " drop " +
                                                  num(drop) + " in " + num(t, 1) + " s"};
  });

  guarded("statistics", [&] {
    Outcome o = suite({bin + "/test_metrics -tc='candidate statistics*'", bin + "/test_checkpoint"}, 60.0);
    const bool identical = !before.empty() && attack_status == 0 && nuts::read_text(dump) == before;
    o.pass = o.pass && identical;
    o.detail += identical ? ", rerun dump byte-identical" : ", rerun dump DIFFERS";
    return o;
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

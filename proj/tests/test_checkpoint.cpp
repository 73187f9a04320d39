// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/checkpoint.hpp"
#include "nuts/synthetic.hpp"

#include <doctest.h>

#include <filesystem>

using namespace nuts;

namespace {

const Vocab& vocab() {
  static const Vocab v = build_vocab(make_synthetic(Task::kSentiment, 1, {100, 10, 10}).train, 1);
  return v;
}

}  // namespace

TEST_CASE("every model kind round-trips bit-identically") {
  const ARAEModel a = init_arae(vocab(), {4, 5, 6, 7, 8, 9}, 3);
  const std::string ab = serialize_checkpoint(to_checkpoint(a, "abc"));
  const ARAEModel a2 = arae_from_checkpoint(parse_checkpoint(ab));
  CHECK(a2.params == a.params);
  CHECK(a2.vocab.regular_tokens() == a.vocab.regular_tokens());
  CHECK(a2.dims.critic_hidden == 9);
  CHECK(a2.seed == 3);
  CHECK(serialize_checkpoint(to_checkpoint(a2, "abc")) == ab);
  CHECK(parse_checkpoint(ab).header.at("config_hash") == "abc");

  for (const VictimArch arch : {VictimArch::kLstm2, VictimArch::kBag}) {
    const VictimClassifier v = init_victim(vocab(), arch, {5, 6, 7}, 2, 4);
    const std::string vb = serialize_checkpoint(to_checkpoint(v, "h"));
    const VictimClassifier v2 = victim_from_checkpoint(parse_checkpoint(vb));
    CHECK(v2.params == v.params);
    CHECK(v2.arch == arch);
    CHECK(serialize_checkpoint(to_checkpoint(v2, "h")) == vb);
  }

  const ScoringLM l = init_lm(vocab(), {5, 6}, 5);
  const std::string lb = serialize_checkpoint(to_checkpoint(l, "h"));
  CHECK(lm_from_checkpoint(parse_checkpoint(lb)).params == l.params);

  const std::filesystem::path path = std::filesystem::temp_directory_path() / "nuts-ckpt-test.ckpt";
  write_checkpoint(path, to_checkpoint(l, "h"));
  CHECK(load_lm(path).params == l.params);
  CHECK_THROWS_AS(load_arae(path), CheckpointError);  // wrong kind
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_checkpoint(path), CheckpointError);
}

TEST_CASE("corrupt files raise typed errors") {
  const std::string good = serialize_checkpoint(to_checkpoint(init_lm(vocab(), {4, 4}, 1), "h"));

  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(magic), CheckpointMagicError);

  std::string version = good;
  version[8] = 7;
  CHECK_THROWS_AS(parse_checkpoint(version), CheckpointVersionError);

  for (const std::size_t cut : {std::size_t{3}, std::size_t{10}, std::size_t{40}, good.size() - 1}) {
    CAPTURE(cut);
    CHECK_THROWS_AS(parse_checkpoint(good.substr(0, cut)), CheckpointTruncatedError);
  }
}

TEST_CASE("tensors must agree with the header") {
  Checkpoint c = to_checkpoint(init_victim(vocab(), VictimArch::kBag, {4, 4, 4}, 2, 1), "h");
  Checkpoint missing = c;
  missing.tensors.erase(missing.tensors.begin());
  CHECK_THROWS_AS(victim_from_checkpoint(missing), CheckpointConsistencyError);

  Checkpoint reshaped = c;
  auto& first = reshaped.tensors.begin()->second;
  first = Tensor::Zero(first.rows() + 1, first.cols());
  CHECK_THROWS_AS(victim_from_checkpoint(reshaped), CheckpointConsistencyError);

  Checkpoint wrong_vocab = c;
  auto& tokens = wrong_vocab.header["vocab"]["tokens"];
  auto& counts = wrong_vocab.header["vocab"]["counts"];
  tokens.erase(tokens.end() - 1);
  counts.erase(counts.end() - 1);
  CHECK_THROWS_AS(victim_from_checkpoint(wrong_vocab), CheckpointConsistencyError);

  Checkpoint extra = c;
  extra.tensors.emplace("stray", Tensor::Zero(1, 1));
  CHECK_THROWS_AS(victim_from_checkpoint(extra), CheckpointConsistencyError);
}

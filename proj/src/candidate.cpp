// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "nuts/candidate.hpp"

namespace nuts {

bool rerank_before(const TriggerCandidate& a, const TriggerCandidate& b, double lambda) {
  const double sa = rerank_score(a.m1, a.m2, lambda);
  const double sb = rerank_score(b.m1, b.m2, lambda);
  if (sa != sb) return sa < sb;
  if (a.m1 != b.m1) return a.m1 < b.m1;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.init_seed < b.init_seed;
}

TriggerCandidate rerank(std::span<const TriggerCandidate> candidates, double lambda) {
  require(!candidates.empty(), "rerank: no candidates");
  require(lambda >= 0.0, "rerank: lambda must be >= 0");
  const TriggerCandidate* best = &candidates.front();
  for (const auto& c : candidates) {
    if (rerank_before(c, *best, lambda)) best = &c;
  }
  return *best;
}

nlohmann::json candidate_json(const TriggerCandidate& c, const std::string& kind) {
  return {{"kind", kind}, {"init_seed", c.init_seed}, {"tokens", c.tokens},
          {"m1_dev", c.m1},  {"m2", c.m2},               {"score", c.score}};
}

}  // namespace nuts

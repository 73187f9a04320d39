// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_CANDIDATE_HPP
#define NUTS_CANDIDATE_HPP

#include "nuts/text.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nuts {

/// One attack candidate.
struct TriggerCandidate {
  std::uint64_t init_seed = 0;
  Tensor n_final;   ///< final noise row; empty for attacks without a noise space
  Tokens tokens;
  double m1 = 0.0;  ///< attacked-class accuracy on the dev subset
  double m2 = 0.0;  ///< LM cross-entropy, nats/token
  double score = 0.0;
};

inline double rerank_score(double m1, double m2, double lambda) { return m1 + lambda * m2; }

/// Rerank order: score, then m1, then tokens, then seed.
bool rerank_before(const TriggerCandidate& a, const TriggerCandidate& b, double lambda);

/// Argmin of m1 + lambda * m2 under rerank_before. Throws on an empty list.
TriggerCandidate rerank(std::span<const TriggerCandidate> candidates, double lambda);

/// Candidate-dump record (one JSON line).
nlohmann::json candidate_json(const TriggerCandidate& c, const std::string& kind);

}  // namespace nuts

#endif  // NUTS_CANDIDATE_HPP

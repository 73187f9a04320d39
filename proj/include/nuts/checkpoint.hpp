// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary model files:
//
//   "NUTSCKPT" | u32 version | u32 header length | JSON header
//   per tensor: u16 name length, name, u8 rank, rank x u32 dims, f32 data
//
// All integers and floats little-endian, data row-major. A 1 x n tensor is
// stored with rank 1.

#ifndef NUTS_CHECKPOINT_HPP
#define NUTS_CHECKPOINT_HPP

#include "nuts/models.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace nuts {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CheckpointMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointConsistencyError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct Checkpoint {
  nlohmann::json header;  ///< kind, hyperparameters, vocab, seed, config_hash
  ParamSet tensors;

  std::string kind() const { return header.at("kind").get<std::string>(); }
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const ARAEModel& m, const std::string& config_hash);
Checkpoint to_checkpoint(const VictimClassifier& m, const std::string& config_hash);
Checkpoint to_checkpoint(const ScoringLM& m, const std::string& config_hash);

/// Rebuild a model; the tensor set must match the header's dimensions and
/// vocabulary exactly, otherwise CheckpointConsistencyError.
ARAEModel arae_from_checkpoint(const Checkpoint& c);
VictimClassifier victim_from_checkpoint(const Checkpoint& c);
ScoringLM lm_from_checkpoint(const Checkpoint& c);

ARAEModel load_arae(const std::filesystem::path& path);
VictimClassifier load_victim(const std::filesystem::path& path);
ScoringLM load_lm(const std::filesystem::path& path);

}  // namespace nuts

#endif  // NUTS_CHECKPOINT_HPP

#pragma once

// Policy checkpoints as canonical JSON: object keys sorted, doubles written
// with 17 significant digits, matrices as row-major nested arrays. Saving a
// loaded checkpoint reproduces the original bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pegx/sac.hpp"

namespace pegx {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointOptimizers {
  nn::OptimizerState actor;
  nn::OptimizerState critic1;
  nn::OptimizerState critic2;
  nn::ScalarAdam temperature;
};

struct PolicyCheckpoint {
  int format_version = kCheckpointFormatVersion;
  int obs_dim = 0;
  int action_dim = 0;
  std::vector<int> actor_hidden;
  std::vector<int> critic_hidden;
  std::string embodiment;
  std::int64_t train_steps = 0;
  std::uint64_t seed = 0;
  nn::MlpParams actor;
  nn::MlpParams critic1;
  nn::MlpParams critic2;
  nn::MlpParams target1;
  nn::MlpParams target2;
  double log_entropy_temp = 0.0;
  std::optional<CheckpointOptimizers> optimizers;
};

PolicyCheckpoint MakeCheckpoint(const sac::SacAgent& agent,
                                const std::string& embodiment,
                                std::int64_t train_steps, std::uint64_t seed,
                                bool include_optimizers);

// Throws ShapeMismatchError when the checkpoint architecture differs from
// the given dimensions and hidden sizes.
void CheckArchitecture(const PolicyCheckpoint& ckpt, int obs_dim,
                       int action_dim, const std::vector<int>& actor_hidden,
                       const std::vector<int>& critic_hidden);

// Rebuilds an agent from the checkpoint with the given hyperparameters and
// observation scaling. Architecture must match hp. Without stored optimizer
// states the optimizers start fresh.
sac::SacAgent AgentFromCheckpoint(const PolicyCheckpoint& ckpt,
                                  const sac::SacHyperparams& hp,
                                  const nn::Vector& obs_scale);

// Throws ValidationError on non-finite values.
std::string SerializeCheckpoint(const PolicyCheckpoint& ckpt);
// CorruptFileError on malformed or incomplete text, VersionMismatchError on
// an unsupported format_version, ShapeMismatchError when the stored
// weights disagree with the stored architecture.
PolicyCheckpoint ParseCheckpoint(const std::string& text);

void SaveCheckpoint(const PolicyCheckpoint& ckpt, const std::string& path);
// Also CorruptFileError when the file cannot be read.
PolicyCheckpoint LoadCheckpoint(const std::string& path);

// Order-sensitive hash of every network parameter, for no-update checks.
std::uint64_t WeightsChecksum(const PolicyCheckpoint& ckpt);

}  // namespace pegx

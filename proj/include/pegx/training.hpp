#pragma once

// Episodic environments as seen by the learner, the peg-in-hole task that
// couples the world, the hybrid controller and the action mapping, and the
// SAC training loop.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "pegx/hybrid_controller.hpp"
#include "pegx/sac.hpp"
#include "pegx/sim_env.hpp"

namespace pegx {

using nn::Vector;

struct EnvStep {
  Vector obs;
  double reward = 0.0;
  TerminalReason reason = TerminalReason::kRunning;
};

// Continuous-control episodic environment with actions in [-1, 1]^n.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  // Starts an episode; the seed fixes the start state and every noise draw.
  virtual Vector Reset(std::uint64_t seed) = 0;
  virtual EnvStep Step(const Vector& raw_action) = 0;
};

// Square patch of start positions above the hole.
struct StartRegion {
  double height = 0.03;      // above the hole center [m]
  double half_width = 0.02;  // lateral half extent [m]
};

struct PegTaskConfig {
  EnvConfig env;
  sac::ActionBounds bounds;
  SelectionMatrix selection = SelectionMatrix::MotionXYForceZ();
  double integral_limit = kDefaultIntegralLimit;
  StartRegion start;
  // Per-episode Gaussian error of the hole position handed to the action
  // mapping [m]; zero means the true hole center.
  double hole_estimate_sigma = 0.0;
};

// One 20 Hz decision: the policy's raw action is mapped to x_hat and
// controller gains and held for the three 60 Hz controller substeps.
class PegTask final : public Environment {
 public:
  explicit PegTask(PegTaskConfig config);

  int obs_dim() const override { return kObservationDim; }
  int action_dim() const override { return sac::kPhysicalActionDim; }

  // Random start in the start region.
  Vector Reset(std::uint64_t seed) override;
  // Fixed start, e.g. from an evaluation grid.
  Vector ResetAt(const Vec3& start, std::uint64_t seed);
  EnvStep Step(const Vector& raw_action) override;

  const PegInHoleEnv& env() const { return env_; }
  const ControllerState& controller() const { return controller_; }
  const Vec3& hole_estimate() const { return hole_estimate_; }
  const PegTaskConfig& config() const { return config_; }

 private:
  PegTaskConfig config_;
  PegInHoleEnv env_;
  ControllerState controller_;
  Vec3 hole_estimate_ = Vec3::Zero();
};

struct CurvePoint {
  std::int64_t step = 0;
  double mean_episode_reward = 0.0;
  double success_rate_window = 0.0;  // percent
};

struct TrainOptions {
  std::int64_t total_steps = 0;
  std::uint64_t seed = 0;
  int curve_interval = 1000;
  // Completed training episodes in the rolling reward/success window.
  int window_episodes = 20;
  double success_threshold_percent = 90.0;
  // Called after each curve point is recorded, e.g. for progress output.
  std::function<void(const CurvePoint&, const sac::SacAgent&)> on_curve_point;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::int64_t episodes = 0;
  std::int64_t updates = 0;
  // First agent step at which the rolling success window (full) reached
  // the threshold.
  std::optional<std::int64_t> steps_to_threshold;
};

// SAC training: uniform random actions for the first warmup_steps, then
// policy samples; updates_per_env_step updates per agent step once
// warmup is over. Deterministic for a fixed seed. Throws DomainError when
// total_steps <= 0.
TrainResult Train(Environment& env, sac::SacAgent& agent,
                  const TrainOptions& options);

struct EpisodeOutcome {
  TerminalReason terminal = TerminalReason::kRunning;
  int steps = 0;
  double cumulative_reward = 0.0;
};

// Deterministic-policy rollout from a fixed start on the peg task.
EpisodeOutcome RunEvalEpisode(PegTask& task, const sac::SacAgent& agent,
                              const Vec3& start, std::uint64_t seed);

}  // namespace pegx

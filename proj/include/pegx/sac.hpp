#pragma once

// Soft actor-critic: squashed-Gaussian actor, twin Q critics with Polyak
// targets, automatic entropy-temperature tuning, and a FIFO replay buffer.
// Dimension-generic; the peg task uses 9-dim observations and actions.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pegx/hybrid_controller.hpp"
#include "pegx/nn.hpp"

namespace pegx::sac {

using nn::Matrix;
using nn::Vector;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct SacHyperparams {
  double gamma = 0.99;
  double polyak_tau = 0.005;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_temp = 3e-4;
  int batch_size = 256;
  int buffer_capacity = 200000;
  int warmup_steps = 1000;
  // Defaults to -action_dim when unset.
  std::optional<double> entropy_target;
  int updates_per_env_step = 1;
  double initial_temp = 1.0;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{300, 400};

  void Validate() const;
  double EntropyTarget(int action_dim) const {
    return entropy_target.value_or(-static_cast<double>(action_dim));
  }
};

struct Transition {
  Vector obs;
  Vector raw_action;  // in [-1, 1]
  double reward = 0.0;
  Vector next_obs;
  // 1 when the episode ended in a true terminal state (success or
  // collision); 0 while running and on timeout, which bootstraps.
  double done_mask = 0.0;
};

struct Batch {
  Matrix obs;       // obs_dim x n
  Matrix action;    // action_dim x n
  Vector reward;    // n
  Matrix next_obs;  // obs_dim x n
  Vector done;      // n
  int size() const { return static_cast<int>(reward.size()); }
};

class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim, int action_dim);

  // Throws RangeError if raw_action leaves [-1, 1], ShapeError on a
  // dimension mismatch.
  void Push(const Transition& t);
  // Oldest-first index into the live contents.
  Transition At(int index) const;
  Batch Sample(int n, std::mt19937_64& rng) const;

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  std::int64_t insertions() const { return insertions_; }

 private:
  int Slot(int index) const;

  int capacity_;
  int obs_dim_;
  int action_dim_;
  int size_ = 0;
  int head_ = 0;  // next write slot
  std::int64_t insertions_ = 0;
  Matrix obs_;
  Matrix action_;
  Vector reward_;
  Matrix next_obs_;
  Vector done_;
};

// Twin critics plus their target copies. Each maps (obs ++ action) to Q.
struct CriticParams {
  nn::MlpParams q1;
  nn::MlpParams q2;
  nn::MlpParams target1;
  nn::MlpParams target2;
};

struct SacAgent {
  int obs_dim = kObservationDim;
  int action_dim = 9;
  // Per-component observation scaling applied before every network.
  Vector obs_scale;
  SacHyperparams hp;
  nn::MlpParams actor;  // obs -> [mean (action_dim), log_std (action_dim)]
  CriticParams critics;
  double log_temp = 0.0;
  nn::OptimizerState actor_opt;
  nn::OptimizerState q1_opt;
  nn::OptimizerState q2_opt;
  nn::ScalarAdam temp_opt;

  static SacAgent Create(int obs_dim, int action_dim, const Vector& obs_scale,
                         const SacHyperparams& hp, std::uint64_t seed);

  double temp() const;
  Matrix ScaleObs(const Matrix& obs) const;
  // Rebuild optimizer states from scratch (keeps the networks).
  void ResetOptimizers();
};

// Squashed-Gaussian draw for a batch of actor outputs. `noise` holds the
// standard-normal draws (action_dim x n).
struct SquashedSample {
  Matrix action;     // tanh(mean + std * noise)
  Vector log_prob;   // including the tanh change-of-variables term
  Matrix pre_tanh;   // mean + std * noise
  Matrix std;
  Matrix log_std_clamped_mask;  // 1 where log_std was clamped
};

SquashedSample Squash(const Matrix& actor_out, const Matrix& noise);

// log(1 - tanh(u)^2), stable for large |u|.
double LogOneMinusTanhSquared(double u);

struct ActionSample {
  Vector raw;
  double log_prob = 0.0;
};

ActionSample SampleAction(const SacAgent& agent, const Vector& obs,
                          std::mt19937_64& rng);
Vector DeterministicAction(const SacAgent& agent, const Vector& obs);

// y = r + gamma (1 - done) (min(Q1', Q2')(s', a') - temp log pi(a'|s')),
// with a' ~ pi(.|s') drawn using `next_noise`.
Vector CriticTarget(const Batch& batch, const SacAgent& agent, double temp,
                    const Matrix& next_noise);

struct Losses {
  double critic = 0.0;  // mean of the two critics' MSE
  double actor = 0.0;
  double temp = 0.0;
};

// One SAC gradient step. Returns nullopt without touching any parameter
// when the buffer holds fewer than batch_size transitions.
std::optional<Losses> UpdateStep(SacAgent& agent, const ReplayBuffer& buffer,
                                 std::mt19937_64& rng);

// Ranges for the physical action the policy drives.
struct ActionBounds {
  Vec3 x_hat_half_range = Vec3::Constant(0.05);  // [m] per axis, around the hole estimate
  double kp_x_lo = 0.0;
  double kp_x_hi = 8.0;
  double kp_f_lo = 0.0;
  double kp_f_hi = 0.02;  // [m/N]

  void Validate() const;
};

struct PhysicalAction {
  Vec3 x_hat_a = Vec3::Zero();
  Vec3 kp_x = Vec3::Zero();
  Vec3 kp_f = Vec3::Zero();
  ControllerGains gains;
};

inline constexpr int kPhysicalActionDim = 9;

// Affine map from [-1, 1]^9. Throws RangeError outside that box.
PhysicalAction MapAction(const Vector& raw, const ActionBounds& bounds,
                         const Vec3& hole_estimate);

}  // namespace pegx::sac

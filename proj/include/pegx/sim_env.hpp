#pragma once

// Cartesian 3-DOF peg-in-hole world: a position-servoed peg tip, a
// penalty-based contact model for the surface and hole wall, a wrist force
// sensor, and the sparse + dense reward.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace pegx {

using Vec3 = Eigen::Vector3d;

bool AllFinite(const Vec3& v);

struct EmbodimentSpec {
  std::string id;
  double tau = 0.05;   // servo time constant [s]
  double zeta = 1.0;   // damping ratio
  double v_max = 0.5;  // per-axis speed limit [m/s]
  Vec3 workspace_lo{-0.1, -0.1, -0.03};
  Vec3 workspace_hi{0.1, 0.1, 0.1};
  double force_noise_sigma = 0.1;  // [N]
  double pos_noise_sigma = 0.0002;  // [m]

  void Validate() const;
  Vec3 Clamp(const Vec3& p) const;
  bool Contains(const Vec3& p) const;

  // Fast, light source platform.
  static EmbodimentSpec DefaultA();
  // Slower, speed-limited, noisier target platform.
  static EmbodimentSpec DefaultB();
};

struct PegHoleGeometry {
  Vec3 hole_center{0.0, 0.0, 0.0};
  double hole_radius = 0.006;
  double peg_radius = 0.005;
  double surface_z = 0.0;
  double insert_depth = 0.020;
  double contact_stiffness = 5000.0;  // [N/m]
  double contact_damping = 50.0;      // [N s/m]
  double collision_force_limit = 50.0;  // [N]

  void Validate() const;
  double clearance() const { return hole_radius - peg_radius; }
  double LateralOffset(const Vec3& pos) const;
  // Inserted to depth with the peg axis inside the clearance.
  bool IsInserted(const Vec3& pos) const;
};

enum class TerminalReason { kRunning, kSuccess, kCollision, kTimeout };

const char* ToString(TerminalReason reason);
TerminalReason TerminalReasonFromString(const std::string& s);
inline bool IsTerminal(TerminalReason r) { return r != TerminalReason::kRunning; }

struct RewardWeights {
  double alpha1 = -1.0;  // [1/m]
  double alpha2 = -0.1;  // [1/N]
  double r_success = 100.0;
  double r_collision = -5.0;
  double r_timeout = -5.0;

  void Validate() const;
};

inline constexpr int kObservationDim = 9;

// What the agent sees: position error to the hole, velocity, and the
// wrist force reading.
struct Observation {
  Vec3 pos_err = Vec3::Zero();  // x_m - x_g
  Vec3 vel = Vec3::Zero();
  Vec3 force = Vec3::Zero();

  std::array<double, kObservationDim> AsArray() const;
  Eigen::Matrix<double, kObservationDim, 1> AsVector() const;
};

struct SimState {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  // Force the environment applies to the peg.
  Vec3 contact_force = Vec3::Zero();
  std::int64_t substep_count = 0;
  std::int64_t agent_step_count = 0;
  std::mt19937_64 rng;
  TerminalReason status = TerminalReason::kRunning;
};

struct ContactResult {
  Vec3 force = Vec3::Zero();
  bool collided = false;
};

// Penalty contact between the peg tip and the plate. Total function.
ContactResult ContactForces(const Vec3& pos, const Vec3& vel,
                            const PegHoleGeometry& geometry);

inline constexpr double kControlDt = 1.0 / 60.0;
inline constexpr int kSubstepsPerAgentStep = 3;

// One semi-implicit integration step of the critically damped servo that
// tracks the (workspace-clamped) command x_c, with contact feedback.
void ServoSubstep(SimState& state, const Vec3& x_c,
                  const EmbodimentSpec& embodiment,
                  const PegHoleGeometry& geometry, double dt,
                  double effective_mass);

double ComputeReward(const Observation& obs, TerminalReason reason,
                     const RewardWeights& weights);

struct EnvConfig {
  PegHoleGeometry geometry;
  EmbodimentSpec embodiment = EmbodimentSpec::DefaultA();
  RewardWeights reward;
  double effective_mass = 2.0;  // [kg]
  int max_agent_steps = 300;
  bool noise_enabled = true;
};

struct StepResult {
  Observation obs;
  TerminalReason reason = TerminalReason::kRunning;
};

// Receives the noiseless internal observation once per 60 Hz substep and
// returns the position command x_c.
using CommandProvider = std::function<Vec3(const Observation&)>;

class PegInHoleEnv {
 public:
  explicit PegInHoleEnv(EnvConfig config);

  // Throws BoundsError when start_pos lies outside the workspace or below
  // the surface.
  Observation Reset(const Vec3& start_pos, std::uint64_t seed);

  // Runs kSubstepsPerAgentStep controller substeps. Throws ProtocolError
  // after a terminal step or before Reset.
  StepResult Step(const CommandProvider& provider);

  const SimState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  Observation InternalObservation() const;

 private:
  Observation Measure();

  EnvConfig config_;
  SimState state_;
  bool ready_ = false;
};

}  // namespace pegx

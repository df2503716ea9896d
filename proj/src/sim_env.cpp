#include "pegx/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pegx/errors.hpp"

namespace pegx {

bool AllFinite(const Vec3& v) { return v.allFinite(); }

void EmbodimentSpec::Validate() const {
  if (!(tau > 0.0) || !(zeta > 0.0) || !(v_max > 0.0)) {
    throw DomainError("embodiment " + id + ": tau, zeta, v_max must be > 0");
  }
  if (!(workspace_lo.array() < workspace_hi.array()).all()) {
    throw DomainError("embodiment " + id +
                      ": workspace_lo must be below workspace_hi");
  }
  if (force_noise_sigma < 0.0 || pos_noise_sigma < 0.0) {
    throw DomainError("embodiment " + id + ": noise sigmas must be >= 0");
  }
}

Vec3 EmbodimentSpec::Clamp(const Vec3& p) const {
  return p.cwiseMax(workspace_lo).cwiseMin(workspace_hi);
}

bool EmbodimentSpec::Contains(const Vec3& p) const {
  return (p.array() >= workspace_lo.array()).all() &&
         (p.array() <= workspace_hi.array()).all();
}

EmbodimentSpec EmbodimentSpec::DefaultA() {
  EmbodimentSpec e;
  e.id = "A";
  e.tau = 0.05;
  e.v_max = 0.5;
  e.force_noise_sigma = 0.1;
  e.pos_noise_sigma = 0.0002;
  return e;
}

EmbodimentSpec EmbodimentSpec::DefaultB() {
  EmbodimentSpec e;
  e.id = "B";
  e.tau = 0.09;
  e.v_max = 0.3;
  e.force_noise_sigma = 0.2;
  e.pos_noise_sigma = 0.0004;
  return e;
}

void PegHoleGeometry::Validate() const {
  if (!(peg_radius > 0.0) || !(hole_radius > peg_radius)) {
    throw DomainError("geometry: need hole_radius > peg_radius > 0");
  }
  if (!(insert_depth > 0.0) || !(contact_stiffness > 0.0) ||
      contact_damping < 0.0 || !(collision_force_limit > 0.0)) {
    throw DomainError(
        "geometry: need insert_depth > 0, contact_stiffness > 0, "
        "contact_damping >= 0, collision_force_limit > 0");
  }
}

double PegHoleGeometry::LateralOffset(const Vec3& pos) const {
  return std::hypot(pos.x() - hole_center.x(), pos.y() - hole_center.y());
}

bool PegHoleGeometry::IsInserted(const Vec3& pos) const {
  return pos.z() <= surface_z - insert_depth &&
         LateralOffset(pos) <= clearance();
}

const char* ToString(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::kRunning:
      return "running";
    case TerminalReason::kSuccess:
      return "success";
    case TerminalReason::kCollision:
      return "collision";
    case TerminalReason::kTimeout:
      return "timeout";
  }
  return "unknown";
}

TerminalReason TerminalReasonFromString(const std::string& s) {
  if (s == "running") return TerminalReason::kRunning;
  if (s == "success") return TerminalReason::kSuccess;
  if (s == "collision") return TerminalReason::kCollision;
  if (s == "timeout") return TerminalReason::kTimeout;
  throw DomainError("unknown terminal reason '" + s + "'");
}

void RewardWeights::Validate() const {
  if (!(alpha1 < 0.0) || !(alpha2 < 0.0)) {
    throw DomainError("reward: alpha1 and alpha2 must be negative");
  }
  if (!(r_success > 0.0) || !(r_collision < 0.0) || !(r_timeout < 0.0)) {
    throw DomainError(
        "reward: need r_success > 0 and negative collision/timeout rewards");
  }
}

std::array<double, kObservationDim> Observation::AsArray() const {
  return {pos_err.x(), pos_err.y(), pos_err.z(), vel.x(), vel.y(),
          vel.z(),     force.x(),   force.y(),   force.z()};
}

Eigen::Matrix<double, kObservationDim, 1> Observation::AsVector() const {
  Eigen::Matrix<double, kObservationDim, 1> v;
  v << pos_err, vel, force;
  return v;
}

ContactResult ContactForces(const Vec3& pos, const Vec3& vel,
                            const PegHoleGeometry& g) {
  ContactResult out;
  if (pos.z() >= g.surface_z) return out;

  const double dx = pos.x() - g.hole_center.x();
  const double dy = pos.y() - g.hole_center.y();
  const double offset = std::hypot(dx, dy);
  if (offset < g.hole_radius) {
    // Peg axis inside the hole mouth: the wall pushes it back to the axis.
    const double overlap = offset - g.clearance();
    if (overlap > 0.0) {
      const double magnitude = g.contact_stiffness * overlap;
      out.force.x() = -magnitude * dx / offset;
      out.force.y() = -magnitude * dy / offset;
    }
  } else {
    // Resting on the plate. Push-only normal force.
    const double penetration = g.surface_z - pos.z();
    out.force.z() = std::max(
        0.0, g.contact_stiffness * penetration - g.contact_damping * vel.z());
  }
  out.collided = out.force.norm() > g.collision_force_limit;
  return out;
}

void ServoSubstep(SimState& s, const Vec3& x_c, const EmbodimentSpec& e,
                  const PegHoleGeometry& g, double dt, double effective_mass) {
  const Vec3 target = e.Clamp(x_c);
  const Vec3 acc = (target - s.pos) / (e.tau * e.tau) -
                   (2.0 * e.zeta / e.tau) * s.vel +
                   s.contact_force / effective_mass;
  s.vel = (s.vel + dt * acc).cwiseMax(-e.v_max).cwiseMin(e.v_max);
  const Vec3 next = s.pos + dt * s.vel;
  s.pos = e.Clamp(next);
  for (int i = 0; i < 3; ++i) {
    if (s.pos[i] != next[i]) s.vel[i] = 0.0;  // stopped at the workspace wall
  }
  s.contact_force = ContactForces(s.pos, s.vel, g).force;
  ++s.substep_count;
}

double ComputeReward(const Observation& obs, TerminalReason reason,
                     const RewardWeights& w) {
  // Goal is the hole position and zero force, so both errors are the
  // measured quantities themselves.
  const double dense = w.alpha1 * obs.pos_err.norm() + w.alpha2 * obs.force.norm();
  switch (reason) {
    case TerminalReason::kSuccess:
      return dense + w.r_success;
    case TerminalReason::kCollision:
      return dense + w.r_collision;
    case TerminalReason::kTimeout:
      return dense + w.r_timeout;
    case TerminalReason::kRunning:
      break;
  }
  return dense;
}

PegInHoleEnv::PegInHoleEnv(EnvConfig config) : config_(std::move(config)) {
  config_.geometry.Validate();
  config_.embodiment.Validate();
  config_.reward.Validate();
  if (!(config_.effective_mass > 0.0) || config_.max_agent_steps <= 0) {
    throw DomainError("env: effective_mass and max_agent_steps must be > 0");
  }
}

Observation PegInHoleEnv::Reset(const Vec3& start_pos, std::uint64_t seed) {
  if (!AllFinite(start_pos) || !config_.embodiment.Contains(start_pos)) {
    throw BoundsError("reset: start position outside the workspace of " +
                      config_.embodiment.id);
  }
  if (start_pos.z() < config_.geometry.surface_z) {
    throw BoundsError("reset: start position below the surface");
  }
  state_ = SimState{};
  state_.pos = start_pos;
  state_.rng.seed(seed);
  ready_ = true;
  return Measure();
}

Observation PegInHoleEnv::InternalObservation() const {
  Observation o;
  o.pos_err = state_.pos - config_.geometry.hole_center;
  o.vel = state_.vel;
  // The wrist sensor reads the force the peg exerts on its surroundings.
  o.force = -state_.contact_force;
  return o;
}

Observation PegInHoleEnv::Measure() {
  Observation o = InternalObservation();
  if (!config_.noise_enabled) return o;
  const auto& e = config_.embodiment;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 3; ++i) o.pos_err[i] += e.pos_noise_sigma * unit(state_.rng);
  for (int i = 0; i < 3; ++i) o.force[i] += e.force_noise_sigma * unit(state_.rng);
  return o;
}

StepResult PegInHoleEnv::Step(const CommandProvider& provider) {
  if (!ready_) throw ProtocolError("step: environment has not been reset");
  if (IsTerminal(state_.status)) {
    throw ProtocolError(std::string("step: episode already ended (") +
                        ToString(state_.status) + ")");
  }
  const auto& g = config_.geometry;
  TerminalReason event = TerminalReason::kRunning;
  for (int k = 0; k < kSubstepsPerAgentStep; ++k) {
    const Vec3 x_c = provider(InternalObservation());
    if (!AllFinite(x_c)) throw DomainError("step: non-finite position command");
    ServoSubstep(state_, x_c, config_.embodiment, g, kControlDt,
                 config_.effective_mass);
    if (event == TerminalReason::kRunning) {
      if (state_.contact_force.norm() > g.collision_force_limit) {
        event = TerminalReason::kCollision;
      } else if (g.IsInserted(state_.pos)) {
        event = TerminalReason::kSuccess;
      }
    }
  }
  ++state_.agent_step_count;
  if (event == TerminalReason::kRunning &&
      state_.agent_step_count >= config_.max_agent_steps) {
    event = TerminalReason::kTimeout;
  }
  state_.status = event;
  return {Measure(), event};
}

}  // namespace pegx

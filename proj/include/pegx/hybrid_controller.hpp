#pragma once

// Hybrid motion/force control law with a diagonal selection matrix:
//
//   u = S (Kp_x x_e + Kd_x xdot_e) + (I - S) (Kp_f F_e + Ki_f int F_e dt)
//
// and the position command x_c = x_hat + u sent to the servo.

#include "pegx/sim_env.hpp"

namespace pegx {

struct SelectionMatrix {
  Vec3 s = Vec3::Ones();  // diagonal, each entry in [0, 1]

  void Validate() const;
  // Motion control in x and y, force control in z.
  static SelectionMatrix MotionXYForceZ() { return {Vec3(1.0, 1.0, 0.0)}; }
};

struct ControllerGains {
  Vec3 kp_x = Vec3::Zero();
  Vec3 kd_x = Vec3::Zero();
  Vec3 kp_f = Vec3::Zero();  // [m/N]
  Vec3 ki_f = Vec3::Zero();  // [m/(N s)]
};

struct ControllerState {
  Vec3 force_integral = Vec3::Zero();  // [N s]
};

struct ControlErrors {
  Vec3 x_e = Vec3::Zero();
  Vec3 x_dot_e = Vec3::Zero();
  Vec3 f_e = Vec3::Zero();
};

inline constexpr double kDerivativeRatio = 0.5;
inline constexpr double kIntegralRatio = 0.001;
inline constexpr double kDefaultIntegralLimit = 10.0;  // [N s]

// Kd_x = 0.5 Kp_x, Ki_f = 0.001 Kp_f. Throws DomainError on negative gains.
ControllerGains DeriveGains(const Vec3& kp_x, const Vec3& kp_f);

struct HybridOutput {
  Vec3 u = Vec3::Zero();
  ControllerState state;
};

// The force integral only accumulates on axes with s_i < 1 and is clamped
// to +-integral_limit per axis.
HybridOutput HybridCommand(const ControlErrors& errors,
                           const ControllerGains& gains,
                           const SelectionMatrix& selection,
                           const ControllerState& state, double dt,
                           double integral_limit = kDefaultIntegralLimit);

inline Vec3 ComposeCommand(const Vec3& x_hat, const Vec3& u) { return x_hat + u; }

inline ControllerState ResetController() { return {}; }

}  // namespace pegx

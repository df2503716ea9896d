#include "pegx/hybrid_controller.hpp"

#include <algorithm>

#include "pegx/errors.hpp"

namespace pegx {

void SelectionMatrix::Validate() const {
  if (!(s.array() >= 0.0).all() || !(s.array() <= 1.0).all()) {
    throw DomainError("selection matrix entries must lie in [0, 1]");
  }
}

ControllerGains DeriveGains(const Vec3& kp_x, const Vec3& kp_f) {
  if (!(kp_x.array() >= 0.0).all() || !(kp_f.array() >= 0.0).all()) {
    throw DomainError("derive_gains: proportional gains must be >= 0");
  }
  ControllerGains g;
  g.kp_x = kp_x;
  g.kd_x = kDerivativeRatio * kp_x;
  g.kp_f = kp_f;
  g.ki_f = kIntegralRatio * kp_f;
  return g;
}

HybridOutput HybridCommand(const ControlErrors& e, const ControllerGains& g,
                           const SelectionMatrix& sel,
                           const ControllerState& state, double dt,
                           double integral_limit) {
  if (!(dt > 0.0)) throw DomainError("hybrid_command: dt must be > 0");
  HybridOutput out;
  out.state = state;
  for (int i = 0; i < 3; ++i) {
    const double s = sel.s[i];
    double& integral = out.state.force_integral[i];
    if (s < 1.0) {
      integral = std::clamp(integral + e.f_e[i] * dt, -integral_limit,
                            integral_limit);
    }
    const double motion = g.kp_x[i] * e.x_e[i] + g.kd_x[i] * e.x_dot_e[i];
    const double force = g.kp_f[i] * e.f_e[i] + g.ki_f[i] * integral;
    // Skip the unselected branch entirely so it cannot leak NaN or rounding.
    out.u[i] = (s > 0.0 ? s * motion : 0.0) + (s < 1.0 ? (1.0 - s) * force : 0.0);
  }
  return out;
}

}  // namespace pegx

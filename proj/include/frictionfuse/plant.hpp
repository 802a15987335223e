#ifndef FRICTIONFUSE_PLANT_HPP
#define FRICTIONFUSE_PLANT_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "planner.hpp"
#include "scenario.hpp"

namespace frictionfuse {

struct StepResult {
  VehicleState state;
  double lambda;
};

// Point mass in road-aligned coordinates; demanded acceleration is saturated on
// the true friction circle, the lateral shortfall shows up as outward drift.
inline StepResult step(const VehicleState& st, const PlannedTrajectory& plan,
                       const Scenario& scenario, double dt, double g = kGravity) {
  if (!(dt > 0.0 && dt <= 0.05)) throw std::invalid_argument("dt must lie in (0, 0.05]");
  if (plan.points.empty()) throw std::invalid_argument("plan has no points");

  const TrajectoryPoint& pt = plan.points[plan.index_at(st.s)];
  const double kappa = scenario.curvature(st.s);
  const double f = 1.0 - kappa * st.d;
  const double k_eff = kappa / f;
  double lon = pt.a_long;
  double lat = pt.d_ddot + k_eff * st.v * st.v;

  const double limit = scenario.friction(st.s) * g;
  const double demand = std::hypot(lon, lat);
  const double lambda = std::min(1.0, demand / limit);
  if (demand > limit) {
    lon *= limit / demand;
    lat *= limit / demand;
  }

  VehicleState next = st;
  next.s = st.s + st.v * dt / f;
  next.d = st.d + st.d_dot * dt;
  next.d_dot = st.d_dot + (lat - k_eff * st.v * st.v) * dt;
  next.v = std::max(0.0, st.v + lon * dt);
  next.t = st.t + dt;
  return {next, lambda};
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_PLANT_HPP

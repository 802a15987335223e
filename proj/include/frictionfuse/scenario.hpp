#ifndef FRICTIONFUSE_SCENARIO_HPP
#define FRICTIONFUSE_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "estimators.hpp"

namespace frictionfuse {

inline constexpr double kGravity = 9.81;

struct VehicleState {
  double s = 0.0;      // arc-length along the path center [m]
  double d = 0.0;      // lateral offset, positive left [m]
  double v = 0.0;      // speed [m/s]
  double t = 0.0;      // [s]
  double d_dot = 0.0;  // lateral rate [m/s]
};

struct PathSegment {
  double s_start;
  double curvature;  // 1/m, positive turns left
};

struct Obstacle {
  double s;
  double half_width;
};

struct EgoFootprint {
  double half_width = 1.25;
  double half_length = 3.75;  // reference point to front and to rear
};

enum class Objective { track_center, avoid_obstacle };

struct Scenario {
  Scenario(std::string name_, std::vector<PathSegment> path_, FrictionProfile friction_, VehicleState initial_)
      : name(std::move(name_)), path(std::move(path_)), friction(std::move(friction_)), initial(initial_) {}

  std::string name;
  std::vector<PathSegment> path;
  FrictionProfile friction;
  VehicleState initial;
  std::optional<Obstacle> obstacle;
  double lane_half_width = 1.75;
  Objective objective = Objective::track_center;

  double left_bound = 1.75;
  double right_bound = 1.75;
  double clearance = 0.5;
  EgoFootprint ego;
  double cruise_speed = 0.0;
  double s_end = 0.0;
  double maneuver_end = 0.0;
  std::optional<double> turn_entry;

  double curvature(double s) const {
    double k = 0.0;
    for (const auto& seg : path)
      if (seg.s_start <= s) k = seg.curvature;
    return k;
  }

  // Largest |kappa| on [a, b).
  double max_abs_curvature(double a, double b) const {
    double k = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const double lo = path[i].s_start;
      const double hi = i + 1 < path.size() ? path[i + 1].s_start : INFINITY;
      if (lo < b && hi > a) k = std::max(k, std::abs(path[i].curvature));
    }
    return k;
  }

  // Lateral distance required beside the obstacle.
  double avoid_offset() const {
    return obstacle ? obstacle->half_width + ego.half_width + clearance : 0.0;
  }
};

struct ScenarioOptions {
  double lane_half_width = 1.75;
  double turn_radius = 20.0;
};

inline void validate(const ScenarioOptions& o) {
  if (!(o.lane_half_width > 0.0)) throw std::invalid_argument("lane_half_width must be > 0");
  if (!(o.turn_radius > 0.0)) throw std::invalid_argument("turn_radius must be > 0");
}

// 90 deg right turn on a surface that drops from 0.8 to 0.4 at s = 0.
inline Scenario turn_scenario(const ScenarioOptions& o = {}) {
  validate(o);
  const double start = 15.0;
  const double exit = start + std::numbers::pi / 2.0 * o.turn_radius;
  Scenario sc{"turn", {{-100.0, 0.0}, {start, -1.0 / o.turn_radius}, {exit, 0.0}},
              FrictionProfile({{-100.0, 0.8}, {0.0, 0.4}}), VehicleState{0.0, 0.0, 12.0, 0.0, 0.0}};
  sc.lane_half_width = o.lane_half_width;
  sc.left_bound = o.lane_half_width;
  sc.right_bound = o.lane_half_width;
  sc.cruise_speed = 12.0;
  sc.s_end = exit + 20.0;
  sc.maneuver_end = exit;
  sc.turn_entry = start;
  return sc;
}

// Straight road, high friction, obstacle in lane 20 m ahead; adjacent lane on the left.
inline Scenario collision_scenario(const ScenarioOptions& o = {}) {
  validate(o);
  Scenario sc{"collision", {{-100.0, 0.0}}, FrictionProfile({{-100.0, 1.0}}),
              VehicleState{0.0, 0.0, 20.0, 0.0, 0.0}};
  sc.obstacle = Obstacle{20.0, 1.0};
  sc.lane_half_width = o.lane_half_width;
  sc.objective = Objective::avoid_obstacle;
  sc.left_bound = 3.0 * o.lane_half_width;
  sc.right_bound = o.lane_half_width;
  sc.cruise_speed = 20.0;
  sc.s_end = 20.0 + 20.0;
  sc.maneuver_end = 20.0 + sc.ego.half_length;
  return sc;
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_SCENARIO_HPP

#ifndef FRICTIONFUSE_PLANNER_HPP
#define FRICTIONFUSE_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fusion.hpp"
#include "scenario.hpp"

namespace frictionfuse {

struct PlannerParams {
  double g = kGravity;
  double friction_reserve = 0.95;  // share of mu_hat*g used for speed limits
  double kp = 2.0;
  double kd = 2.8;
  int track_angle_step_deg = 5;
  int avoid_angle_step_deg = 2;
};

struct TrajectoryPoint {
  double s;  // relative to the plan origin
  double d_target;
  double d;
  double d_dot;
  double v;
  double a_long;
  double a_lat;   // planar lateral acceleration, includes the centripetal part
  double d_ddot;  // a_lat minus the path-following centripetal term
};

struct PlannedTrajectory {
  double s_origin = 0.0;
  double ds = 1.0;
  std::vector<TrajectoryPoint> points;
  bool feasible = true;

  std::size_t index_at(double s) const {
    const double q = std::floor((s - s_origin) / ds);
    if (!(q > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(q), points.size() - 1);
  }

  double planned_d(double s) const {
    const double x = (s - s_origin) / ds;
    if (x <= 0.0) return points.front().d;
    const std::size_t i = static_cast<std::size_t>(x);
    if (i + 1 >= points.size()) return points.back().d;
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * points[i].d + w * points[i + 1].d;
  }
};

namespace detail {

inline constexpr double kUnbounded = 1e9;

struct Evade {
  double cross;    // reference s at which the ego front reaches the obstacle
  double offset;   // required d beside it
  double release;  // reference s at which the ego rear has passed it
};

struct Rollout {
  std::vector<TrajectoryPoint> points;
  bool saturated = false;
  double max_dev = 0.0;
  std::optional<double> d_cross;
};

inline std::vector<double> speed_profile(const Scenario& sc, double s0,
                                         const std::vector<double>& mu_hat, double ds,
                                         const PlannerParams& p) {
  const std::size_t n = mu_hat.size();
  const double vcap = std::max(sc.cruise_speed, 0.0);
  std::vector<double> vl(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = s0 + static_cast<double>(i) * ds;
    const double k = sc.max_abs_curvature(a, a + ds);
    const double amax = p.friction_reserve * std::max(mu_hat[i], 0.0) * p.g;
    vl[i] = k > 0.0 ? std::min(vcap, std::sqrt(amax / k)) : vcap;
  }
  for (std::size_t j = n - 1; j-- > 0;) {
    const double a = s0 + static_cast<double>(j) * ds;
    const double k = sc.max_abs_curvature(a, a + ds);
    const double amax = p.friction_reserve * std::max(mu_hat[j], 0.0) * p.g;
    const double lat = k * vl[j] * vl[j];
    const double along = std::sqrt(std::max(0.0, amax * amax - lat * lat));
    vl[j] = std::min(vl[j], std::sqrt(vl[j + 1] * vl[j + 1] + 2.0 * along * ds));
  }
  return vl;
}

struct CellEnd {
  double v, d, d_dot;
};

// Constant accelerations over one cell of reference arc-length ds.
inline CellEnd integrate_cell(double v, double d, double d_dot, double a_long, double d_ddot,
                              double kappa, double ds) {
  const double f = 1.0 - kappa * d;
  const double vn = std::sqrt(std::max(0.0, v * v + 2.0 * a_long * f * ds));
  if (v + vn < 1e-9) return {0.0, d, d_dot};
  const double dt = 2.0 * f * ds / (v + vn);
  return {vn, d + d_dot * dt + 0.5 * d_ddot * dt * dt, d_dot + d_ddot * dt};
}

inline Rollout rollout(const VehicleState& st, const Scenario& sc,
                       const std::vector<double>& mu_hat, const std::vector<double>& vref,
                       double ds, std::optional<double> theta, std::optional<Evade> evade,
                       const PlannerParams& p) {
  const std::size_t n = mu_hat.size();
  Rollout r;
  r.points.reserve(n);
  double d = st.d, d_dot = st.d_dot, v = st.v;
  for (std::size_t i = 0; i < n; ++i) {
    const double amax = std::max(mu_hat[i], 0.0) * p.g;
    const double sa = st.s + static_cast<double>(i) * ds;
    const double k = sc.curvature(sa);
    double ddes, gdes, target;
    if (evade && sa < evade->release) {
      const double alat = amax * std::sin(*theta);
      const double horizon_t = std::max(evade->cross - sa, 0.0) / std::max(v, 0.1);
      const double t_stop = alat > 0.0 ? d_dot / alat : kUnbounded;
      const double tp = std::min(horizon_t, t_stop);
      const double d_end = d + d_dot * tp - 0.5 * alat * tp * tp;
      if (d >= evade->offset && d_dot <= 1e-6)
        ddes = -p.kp * (d - evade->offset) - p.kd * d_dot;
      else if (d_end >= evade->offset && d_dot > 1e-6)
        ddes = -kUnbounded;
      else
        ddes = kUnbounded;
      gdes = *theta < std::numbers::pi / 2.0 - 1e-9 ? -kUnbounded : 0.0;
      target = evade->offset;
    } else {
      ddes = -p.kp * d - p.kd * d_dot;
      const double vn = i + 1 < n ? vref[i + 1] : vref[i];
      gdes = (vn * vn - v * v) / (2.0 * ds);
      target = 0.0;
    }
    const double k_eff = k / (1.0 - k * d);
    const double ldes = ddes + k_eff * v * v;

    double lat, lon;
    if (!theta) {
      if (std::abs(ldes) > amax) gdes = -kUnbounded;
      lat = std::clamp(ldes, -amax, amax);
      const double gcap = std::sqrt(std::max(0.0, amax * amax - lat * lat));
      lon = std::clamp(gdes, -gcap, gcap);
      if (std::abs(ldes) > amax + 1e-9 || gdes < -gcap - 1e-6) r.saturated = true;
    } else {
      const double lcap = amax * std::sin(*theta);
      if (std::abs(ldes) > lcap) gdes = std::min(gdes, -kUnbounded);
      lat = std::clamp(ldes, -lcap, lcap);
      const double gcap = std::sqrt(std::max(0.0, amax * amax - lat * lat));
      lon = std::clamp(gdes, -gcap, gcap);
    }
    if (v <= 1e-9 && lon < 0.0) lon = 0.0;
    lon = std::max(lon, -v * v / (2.0 * ds));
    const double d_ddot = lat - k_eff * v * v;

    r.points.push_back({static_cast<double>(i) * ds, target, d, d_dot, v, lon, lat, d_ddot});
    if (i + 1 == n) break;

    const CellEnd e = integrate_cell(v, d, d_dot, lon, d_ddot, k, ds);
    v = e.v;
    d = e.d;
    d_dot = e.d_dot;
    if (!evade) r.max_dev = std::max(r.max_dev, std::abs(d - target));
    if (evade && !r.d_cross && sa + ds >= evade->cross) r.d_cross = d;
  }
  return r;
}

}  // namespace detail

inline PlannedTrajectory plan(const VehicleState& state, const Scenario& scenario,
                              const std::vector<double>& mu_hat, const SGrid& grid,
                              const PlannerParams& params = {}) {
  if (mu_hat.size() != grid.size()) throw std::invalid_argument("mu_hat must cover the grid");
  if (!(state.v >= 0.0)) throw std::invalid_argument("vehicle speed must be >= 0");
  if (params.track_angle_step_deg <= 0 || params.avoid_angle_step_deg <= 0)
    throw std::invalid_argument("allocation angle steps must be positive");

  const double ds = grid.ds();
  const auto vref = detail::speed_profile(scenario, state.s, mu_hat, ds, params);
  auto finish = [&](detail::Rollout&& r, bool feasible) {
    return PlannedTrajectory{state.s, ds, std::move(r.points), feasible};
  };
  auto rad = [](int deg) { return static_cast<double>(deg) * std::numbers::pi / 180.0; };

  const bool avoiding = scenario.objective == Objective::avoid_obstacle && scenario.obstacle &&
                        state.s - scenario.ego.half_length <= scenario.obstacle->s;
  if (avoiding) {
    const double s_obs = scenario.obstacle->s;
    const double hl = scenario.ego.half_length;
    const detail::Evade ev{s_obs - hl, scenario.avoid_offset(), s_obs + hl};
    std::optional<detail::Rollout> best;
    double best_cross = 0.0;
    for (int deg = 90; deg >= 0; deg -= params.avoid_angle_step_deg) {
      auto r = detail::rollout(state, scenario, mu_hat, vref, ds, rad(deg), ev, params);
      const double dc = r.d_cross ? *r.d_cross : (state.s + hl >= s_obs ? state.d : -detail::kUnbounded);
      if (dc >= ev.offset - 1e-6) return finish(std::move(r), true);
      if (!best || dc > best_cross + 1e-9) {
        best = std::move(r);
        best_cross = dc;
      }
    }
    return finish(std::move(*best), false);
  }

  auto nominal = detail::rollout(state, scenario, mu_hat, vref, ds, std::nullopt, std::nullopt, params);
  if (!nominal.saturated) return finish(std::move(nominal), true);
  detail::Rollout best = std::move(nominal);
  for (int deg = 90; deg >= 0; deg -= params.track_angle_step_deg) {
    auto r = detail::rollout(state, scenario, mu_hat, vref, ds, rad(deg), std::nullopt, params);
    if (r.max_dev < best.max_dev - 1e-9) best = std::move(r);
  }
  return finish(std::move(best), false);
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_PLANNER_HPP

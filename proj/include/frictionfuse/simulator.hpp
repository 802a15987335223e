#ifndef FRICTIONFUSE_SIMULATOR_HPP
#define FRICTIONFUSE_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "estimators.hpp"
#include "plant.hpp"
#include "planner.hpp"
#include "scenario.hpp"

namespace frictionfuse {

enum class Outcome { ok, lane_departure, collision };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::ok: return "ok";
    case Outcome::lane_departure: return "lane_departure";
    case Outcome::collision: return "collision";
  }
  return "";
}

struct SimulationOptions {
  double replan_dt = 0.1;
  double sim_dt = 0.01;
  SGrid grid{};
  ErrorMode error = ErrorMode::worst_over();
  PlannerParams planner{};
  double max_time = 60.0;
};

struct TraceSample {
  double t, s, d, v, lambda;
  Outcome outcome;
};

struct ReplanRecord {
  double t;
  double s;
  EstimateSnapshot estimate;
  double utilization_ratio;  // mu_hat(0) / mu_gt(0)
  PlannedTrajectory plan;
};

struct ScenarioMetrics {
  Outcome outcome = Outcome::ok;
  double max_abs_d = 0.0;
  std::optional<double> min_clearance;
  double impact_velocity = 0.0;
  std::optional<double> turn_entry_speed;
  double mean_utilization_ratio = 0.0;
  int infeasible_replans = 0;
  double end_time = 0.0;
  double final_d = 0.0;
};

struct ScenarioResult {
  std::string scenario;
  ConfigKind config = ConfigKind::gt;
  ErrorMode error;
  std::vector<TraceSample> trace;
  std::vector<ReplanRecord> replans;
  ScenarioMetrics metrics;
  std::optional<std::string> failure;
};

inline std::size_t steps_per_replan(double replan_dt, double sim_dt) {
  if (!(sim_dt > 0.0 && sim_dt <= 0.05)) throw std::invalid_argument("sim_dt must lie in (0, 0.05]");
  if (!(replan_dt > 0.0)) throw std::invalid_argument("replan_dt must be > 0");
  const double q = replan_dt / sim_dt;
  const double r = std::round(q);
  if (r < 1.0 || std::abs(q - r) > 1e-9 * q)
    throw std::invalid_argument("replan_dt must be a multiple of sim_dt");
  return static_cast<std::size_t>(r);
}

inline ScenarioResult run(const Scenario& scenario, const Configuration& config,
                          const SimulationOptions& opts = {}) {
  const std::size_t per_replan = steps_per_replan(opts.replan_dt, opts.sim_dt);

  ScenarioResult res;
  res.scenario = scenario.name;
  res.config = config.kind;
  res.error = opts.error;
  ScenarioMetrics& m = res.metrics;

  VehicleState st = scenario.initial;
  double lambda = 0.0;
  // seeded with the class mean of the surface the vehicle arrives from
  LocalEstimator estimator(opts.error, classify(scenario.friction(st.s - 1.0)).mean);
  res.trace.push_back({st.t, st.s, st.d, st.v, lambda, m.outcome});

  try {
    const PlannedTrajectory* current = nullptr;
    for (std::size_t k = 0; st.s < scenario.s_end && st.t < opts.max_time; ++k) {
      if (k % per_replan == 0) {
        const FrictionProfile ahead = scenario.friction.relative_to(st.s);
        EstimateSnapshot snap = estimate_snapshot(config, ahead, opts.grid, lambda, estimator);
        PlannedTrajectory p = plan(st, scenario, snap.mu_hat, opts.grid, opts.planner);
        if (!p.feasible) ++m.infeasible_replans;
        const double ratio = snap.mu_hat.front() / snap.mu_gt.front();
        res.replans.push_back({st.t, st.s, std::move(snap), ratio, std::move(p)});
        current = &res.replans.back().plan;
      }

      const StepResult sr = step(st, *current, scenario, opts.sim_dt, opts.planner.g);
      st = sr.state;
      st.t = static_cast<double>(k + 1) * opts.sim_dt;
      lambda = sr.lambda;

      if (scenario.turn_entry && !m.turn_entry_speed && st.s >= *scenario.turn_entry)
        m.turn_entry_speed = st.v;
      m.max_abs_d = std::max(m.max_abs_d, std::abs(st.d));
      if (m.outcome == Outcome::ok && (st.d > scenario.left_bound || st.d < -scenario.right_bound))
        m.outcome = Outcome::lane_departure;

      bool hit = false;
      if (scenario.obstacle) {
        const Obstacle& ob = *scenario.obstacle;
        const double hl = scenario.ego.half_length;
        if (st.s - hl <= ob.s && ob.s <= st.s + hl) {
          const double gap = std::abs(st.d) - ob.half_width - scenario.ego.half_width;
          m.min_clearance = m.min_clearance ? std::min(*m.min_clearance, gap) : gap;
          if (gap <= 0.0) {
            m.impact_velocity = st.v;
            m.outcome = Outcome::collision;
            hit = true;
          }
        }
      }
      res.trace.push_back({st.t, st.s, st.d, st.v, lambda, m.outcome});
      if (hit) break;
    }
  } catch (const std::exception& e) {
    res.failure = e.what();
  }

  double sum = 0.0;
  int count = 0;
  for (const auto& r : res.replans)
    if (r.s <= scenario.maneuver_end) {
      sum += r.utilization_ratio;
      ++count;
    }
  m.mean_utilization_ratio = count > 0 ? sum / count : 0.0;
  m.end_time = st.t;
  m.final_d = st.d;
  return res;
}

}  // namespace frictionfuse

#endif  // FRICTIONFUSE_SIMULATOR_HPP

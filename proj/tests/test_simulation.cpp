#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "frictionfuse/simulator.hpp"
#include "oracles.hpp"

using namespace frictionfuse;

namespace {

Scenario straight_road() {
  Scenario s = turn_scenario();
  s.path = {{-100.0, 0.0}};
  s.turn_entry.reset();
  return s;
}

ScenarioResult run_kind(const Scenario& sc, ConfigKind k, ErrorMode e) {
  Configuration c;
  c.kind = k;
  SimulationOptions o;
  o.error = e;
  return run(sc, c, o);
}

double best_lateral_offset_at_crossing(double mu, double v0, double distance) {
  // Oracle: constant allocation angle, fine time steps, point mass.
  double best = -1.0;
  for (int deg = 0; deg <= 90; ++deg) {
    const double th = deg * std::numbers::pi / 180.0;
    const double a = mu * kGravity;
    double s = 0, d = 0, dd = 0, v = v0;
    const double h = 1e-4;
    while (s < distance && v > 0) {
      s += v * h;
      d += dd * h;
      dd += a * std::sin(th) * h;
      v -= a * std::cos(th) * h;
    }
    if (s >= distance) best = std::max(best, d);
  }
  return best;
}

}  // namespace

TEST(Planner, CruiseOnStraightRoad) {
  SGrid g;
  const Scenario sc = straight_road();
  auto p = plan({0.0, 0.0, 12.0, 0.0, 0.0}, sc, std::vector<double>(g.size(), 0.4), g);
  EXPECT_TRUE(p.feasible);
  ASSERT_EQ(p.points.size(), g.size());
  for (const auto& pt : p.points) {
    EXPECT_NEAR(pt.v, 12.0, 1e-9);
    EXPECT_NEAR(pt.a_long, 0.0, 1e-9);
    EXPECT_NEAR(pt.a_lat, 0.0, 1e-9);
    EXPECT_NEAR(pt.d, 0.0, 1e-12);
  }
}

TEST(Planner, SlowsForTheLowFrictionTurn) {
  SGrid g;
  const Scenario sc = turn_scenario();
  const double mu = 0.4;
  auto p = plan(sc.initial, sc, std::vector<double>(g.size(), mu), g);
  const double kappa = 1.0 / 20.0;
  const double v_turn = std::sqrt(mu * kGravity / kappa);  // closed form
  EXPECT_NEAR(v_turn, 8.85889, 1e-5);

  std::vector<double> a_long;
  for (std::size_t i = 0; i + 1 < p.points.size(); ++i) a_long.push_back(p.points[i].a_long);
  const auto v_ref = oracle::integrate_speed(sc.initial.v, a_long, g.ds());

  for (std::size_t i = 0; i < p.points.size(); ++i) {
    const auto& pt = p.points[i];
    EXPECT_NEAR(pt.v, v_ref[i], 1e-3) << "s=" << pt.s;
    if (sc.max_abs_curvature(pt.s, pt.s + g.ds()) > 0.0) {
      EXPECT_LE(pt.v, v_turn) << "s=" << pt.s;
      EXPECT_LE(kappa * v_ref[i] * v_ref[i], mu * kGravity) << "s=" << pt.s;
    }
  }
  EXPECT_EQ(p.points.front().v, 12.0);
  EXPECT_LT(p.points[15].v, 12.0);
  bool brakes_before_turn = false;
  for (const auto& pt : p.points)
    if (pt.s < 15.0 && pt.a_long < 0.0) brakes_before_turn = true;
  EXPECT_TRUE(brakes_before_turn);
}

TEST(Planner, NoCollisionFreeSwerveAtClassMinimum) {
  SGrid g;
  const Scenario sc = collision_scenario();
  const double distance = sc.obstacle->s - sc.ego.half_length;
  ASSERT_LT(best_lateral_offset_at_crossing(0.6, 20.0, distance), sc.avoid_offset());
  ASSERT_GE(best_lateral_offset_at_crossing(0.95, 20.0, distance), sc.avoid_offset());

  auto p = plan(sc.initial, sc, std::vector<double>(g.size(), 0.6), g);
  EXPECT_FALSE(p.feasible);
  const auto& first = p.points.front();
  EXPECT_NEAR(std::hypot(first.a_long, first.a_lat), 0.6 * kGravity, 1e-9);
  EXPECT_LT(first.a_long, 0.0);

  auto q = plan(sc.initial, sc, std::vector<double>(g.size(), 0.95), g);
  EXPECT_TRUE(q.feasible);
}

TEST(Planner, FrictionCircleHoldsForRandomInputs) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> mu(0.1, 1.2), s(-5.0, 60.0), d(-1.0, 1.0), v(0.0, 20.0);
  SGrid g;
  const Scenario scs[] = {turn_scenario(), collision_scenario()};
  for (int it = 0; it < 200; ++it) {
    const Scenario& sc = scs[it % 2];
    std::vector<double> m(g.size());
    for (double& x : m) x = mu(rng);
    auto p = plan({s(rng), d(rng), v(rng), 0.0, d(rng)}, sc, m, g);
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      const double lim = m[i] * kGravity;
      EXPECT_LE(std::hypot(p.points[i].a_long, p.points[i].a_lat), lim * (1.0 + 1e-12)) << it << " " << i;
    }
  }
}

TEST(Planner, Validation) {
  SGrid g;
  const Scenario sc = turn_scenario();
  EXPECT_THROW(plan(sc.initial, sc, std::vector<double>(10, 0.4), g), std::invalid_argument);
  EXPECT_THROW(plan({0, 0, -1, 0, 0}, sc, std::vector<double>(g.size(), 0.4), g), std::invalid_argument);
}

TEST(Plant, ZeroDemandCoasts) {
  const Scenario sc = straight_road();
  PlannedTrajectory p{0.0, 1.0, {{0, 0, 0, 0, 10, 0, 0, 0}}, true};
  auto r = step({0.0, 0.3, 10.0, 0.0, 0.0}, p, sc, 0.01);
  EXPECT_NEAR(r.state.s, 0.1, 1e-15);
  EXPECT_EQ(r.state.d, 0.3);
  EXPECT_EQ(r.state.v, 10.0);
  EXPECT_EQ(r.lambda, 0.0);
}

TEST(Plant, HalfFrictionDemandFollowedExactly) {
  const Scenario sc = straight_road();  // mu_gt = 0.4 ahead of s = 0
  const double a = 0.5 * 0.4 * kGravity;
  PlannedTrajectory p{0.0, 1.0, {{0, 0, 0, 0, 10, -a * 0.6, a * 0.8, a * 0.8}}, true};
  auto r = step({1.0, 0.0, 10.0, 0.0, 0.0}, p, sc, 0.01);
  EXPECT_NEAR(r.lambda, 0.5, 1e-15);
  EXPECT_NEAR(r.state.v, 10.0 - a * 0.6 * 0.01, 1e-15);
  EXPECT_NEAR(r.state.d_dot, a * 0.8 * 0.01, 1e-15);
}

TEST(Plant, SaturatesOnTheTrueFrictionCircle) {
  const Scenario sc = straight_road();
  const double a = 2.0 * 0.4 * kGravity;
  PlannedTrajectory p{0.0, 1.0, {{0, 0, 0, 0, 10, 0, a, a}}, true};
  auto r = step({1.0, 0.0, 10.0, 0.0, 0.0}, p, sc, 0.01);
  EXPECT_EQ(r.lambda, 1.0);
  EXPECT_NEAR(r.state.d_dot, 0.4 * kGravity * 0.01, 1e-15);
  EXPECT_THROW(step({1.0, 0.0, 10.0, 0.0, 0.0}, p, sc, 0.06), std::invalid_argument);
  EXPECT_THROW(step({1.0, 0.0, 10.0, 0.0, 0.0}, p, sc, 0.0), std::invalid_argument);
}

TEST(Plant, TracksThePlanWhenEstimateIsConservative) {
  struct Case {
    Scenario sc;
    ConfigKind k;
    ErrorMode e;
  };
  const Case cases[] = {{turn_scenario(), ConfigKind::gt, ErrorMode::worst_over()},
                        {turn_scenario(), ConfigKind::p, ErrorMode::worst_over()},
                        {collision_scenario(), ConfigKind::gt, ErrorMode::worst_under()},
                        {collision_scenario(), ConfigKind::p, ErrorMode::worst_under()}};
  for (const Case& c : cases) {
    auto r = run_kind(c.sc, c.k, c.e);
    for (std::size_t j = 1; j < r.trace.size(); ++j) {
      const auto& rec = r.replans[(j - 1) / 10];
      const auto& smp = r.trace[j];
      EXPECT_LE(std::abs(smp.d - rec.plan.planned_d(smp.s)), 0.1)
          << c.sc.name << " " << to_string(c.k) << " t=" << smp.t;
    }
  }
}

TEST(Run, TurnGroundTruthStaysInLane) {
  auto r = run_kind(turn_scenario(), ConfigKind::gt, ErrorMode::worst_over());
  EXPECT_EQ(r.metrics.outcome, Outcome::ok);
  EXPECT_LE(r.metrics.max_abs_d, 1.75);
  ASSERT_TRUE(r.metrics.turn_entry_speed);
  EXPECT_LT(*r.metrics.turn_entry_speed, 12.0);
  EXPECT_FALSE(r.failure);
}

TEST(Run, TurnLocalOnlySlipsAndRecovers) {
  auto r = run_kind(turn_scenario(), ConfigKind::l, ErrorMode::worst_over());
  EXPECT_EQ(r.metrics.outcome, Outcome::lane_departure);
  EXPECT_GT(r.metrics.max_abs_d, 1.75);
  EXPECT_LE(std::abs(r.metrics.final_d), 1.75);
}

TEST(Run, CollisionPredictiveOnlyHits) {
  auto r = run_kind(collision_scenario(), ConfigKind::p, ErrorMode::worst_under());
  EXPECT_EQ(r.metrics.outcome, Outcome::collision);
  EXPECT_GE(r.metrics.impact_velocity, 15.0);
  EXPECT_LE(r.metrics.impact_velocity, 19.0);
}

TEST(Run, CollisionFusedClears) {
  auto r = run_kind(collision_scenario(), ConfigKind::f, ErrorMode::worst_under());
  EXPECT_EQ(r.metrics.outcome, Outcome::ok);
  ASSERT_TRUE(r.metrics.min_clearance);
  EXPECT_GT(*r.metrics.min_clearance, 0.0);
}

TEST(RunProperties, TurnOrdering) {
  const Scenario sc = turn_scenario();
  const double l = run_kind(sc, ConfigKind::l, ErrorMode::worst_over()).metrics.max_abs_d;
  for (ConfigKind k : {ConfigKind::gt, ConfigKind::p, ConfigKind::f})
    EXPECT_GT(l, run_kind(sc, k, ErrorMode::worst_over()).metrics.max_abs_d) << to_string(k);
  EXPECT_GT(l, sc.lane_half_width);
}

TEST(RunProperties, CollisionOrderingAndUtilization) {
  const Scenario sc = collision_scenario();
  auto gt = run_kind(sc, ConfigKind::gt, ErrorMode::worst_under());
  auto l = run_kind(sc, ConfigKind::l, ErrorMode::worst_under());
  auto p = run_kind(sc, ConfigKind::p, ErrorMode::worst_under());
  auto f = run_kind(sc, ConfigKind::f, ErrorMode::worst_under());
  EXPECT_GT(p.metrics.impact_velocity, 0.0);
  for (auto* r : {&gt, &l, &f}) EXPECT_EQ(r->metrics.impact_velocity, 0.0);
  EXPECT_LE(*f.metrics.min_clearance, *gt.metrics.min_clearance + 0.05);

  ASSERT_EQ(l.replans.size(), f.replans.size());
  for (std::size_t i = 0; i < l.replans.size(); ++i) {
    if (l.replans[i].s > sc.maneuver_end) break;
    EXPECT_EQ(gt.replans[i].utilization_ratio, 1.0);
    if (i < p.replans.size()) {
      EXPECT_NEAR(p.replans[i].utilization_ratio, 0.6, 1e-12);
    }
    if (l.replans[i].estimate.local_available && f.replans[i].estimate.local_available) {
      EXPECT_LE(f.replans[i].utilization_ratio, 1.0);
      EXPECT_GE(f.replans[i].utilization_ratio, l.replans[i].utilization_ratio);
    }
  }
}

TEST(RunProperties, Deterministic) {
  for (ConfigKind k : {ConfigKind::l, ConfigKind::f}) {
    auto a = run_kind(collision_scenario(), k, ErrorMode::worst_under());
    auto b = run_kind(collision_scenario(), k, ErrorMode::worst_under());
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      EXPECT_EQ(a.trace[i].s, b.trace[i].s);
      EXPECT_EQ(a.trace[i].d, b.trace[i].d);
      EXPECT_EQ(a.trace[i].lambda, b.trace[i].lambda);
    }
    EXPECT_EQ(a.metrics.max_abs_d, b.metrics.max_abs_d);
  }
}

TEST(Run, FailureIsRecorded) {
  Configuration c;
  c.kind = ConfigKind::f;
  c.prior = GpPrior<SquaredExponential>(0.55, SquaredExponential(1e8, 10.0));
  auto r = run(turn_scenario(), c, SimulationOptions{});
  ASSERT_TRUE(r.failure);
  EXPECT_NE(r.failure->find("positive definite"), std::string::npos);
}

TEST(Run, ReplanMustBeMultipleOfStep) {
  SimulationOptions o;
  o.replan_dt = 0.015;
  EXPECT_THROW(run(turn_scenario(), Configuration{}, o), std::invalid_argument);
}

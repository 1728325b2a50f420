/*
 * Copyright (C) 2026 The latplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#include <gtest/gtest.h>

#include "latplan/dynamics.hpp"
#include "properties.hpp"

using namespace latplan;

namespace {

Vec v2(double x, double y)
{
  Vec v(2);
  v << x, y;
  return v;
}

} // namespace

TEST(Dynamics, ControlSetExamples)
{
  SystemSpec s;
  s.dim = 1;
  s.u_max = 2.0;
  s.du = 3;
  auto set = generate_control_set(s);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set[0].u[0], -2.0);
  EXPECT_EQ(set[1].u[0], 0.0);
  EXPECT_EQ(set[2].u[0], 2.0);

  s.dim = 2;
  s.u_max = 1.0;
  set = generate_control_set(s);
  EXPECT_EQ(set.size(), 9u);
  EXPECT_TRUE(std::any_of(set.begin(), set.end(), [](const Control& c) { return c.u.isZero(0.0); }));

  s.u_max = 2.0;
  s.du = 5;
  s.yaw_enabled = true;
  s.u_psi_max = 0.5;
  s.du_psi = 3;
  EXPECT_EQ(generate_control_set(s).size(), 75u);
}

TEST(Dynamics, PropagateExamples)
{
  const State rest = State(2, 2);
  const auto p = propagate(rest, Control{v2(1, 0), 0.0}, 2.0, 2);
  EXPECT_EQ(p.end.pos(), v2(2, 0));
  EXPECT_EQ(p.end.vel(), v2(2, 0));
  EXPECT_EQ(p.end.t, 2.0);

  State s(2, 2);
  s.x[0] = v2(1.5, -2);
  s.t = 3.0;
  const auto h = propagate(s, Control{v2(0, 0), 0.0}, 1.0, 2);
  EXPECT_EQ(h.end.pos(), s.pos());
  EXPECT_EQ(h.end.vel(), s.vel());
  EXPECT_EQ(h.end.t, 4.0);
}

TEST(Dynamics, PropagateRejectsNonPositiveDuration)
{
  EXPECT_THROW(propagate(State(2, 2), Control{v2(0, 0), 0.0}, 0.0, 2), std::invalid_argument);
}

TEST(Dynamics, YawIntegratesAndWraps)
{
  State s(2, 2);
  s.yaw = 3.0;
  const auto p = propagate(s, Control{v2(0, 0), 1.0}, 1.0, 2);
  EXPECT_NEAR(p.end.yaw, 4.0 - 2.0 * kPi, 1e-12);
  EXPECT_NEAR(p.yaw(1.0), 4.0, 1e-12);
  EXPECT_EQ(wrap_angle(kPi), kPi);
  EXPECT_EQ(wrap_angle(-kPi), kPi);
}

TEST(Dynamics, PrimitiveCostExamples)
{
  const State rest(2, 2);
  EXPECT_EQ(primitive_cost(propagate(rest, Control{v2(0, 0), 0.0}, 1.0, 2), 0.0), 0.0);
  EXPECT_EQ(primitive_cost(propagate(rest, Control{v2(3, 4), 0.0}, 2.0, 2), 0.0), 50.0);
  EXPECT_EQ(primitive_cost(propagate(rest, Control{v2(1, 0), 0.0}, 0.5, 2), 10.0), 5.5);
}

TEST(Dynamics, FeasibilityExamples)
{
  SystemSpec s;
  s.v_max = 2.0;
  const auto p = propagate(State(2, 2), Control{v2(1, 0), 0.0}, 1.0, 2);
  EXPECT_TRUE(check_dynamic_feasibility(p, s));
  s.v_max = 0.5;
  EXPECT_FALSE(check_dynamic_feasibility(p, s));
}

TEST(Dynamics, FeasibilityCatchesInteriorPeak)
{
  // Jerk-controlled: velocity peaks strictly inside the primitive.
  SystemSpec s;
  s.order = 3;
  s.v_max = 1.0;
  s.a_max = 10.0;
  State st(1, 3);
  st.x[1] << 0.9;
  st.x[2] << 1.0;
  Vec u(1);
  u << -2.0;
  // v(t) = 0.9 + t - t^2, max 1.15 at t = 0.5; both ends are <= 0.9.
  const auto p = propagate(st, Control{u, 0.0}, 1.0, 3);
  EXPECT_LE(std::abs(p.end.x[1][0]), 1.0);
  EXPECT_FALSE(check_dynamic_feasibility(p, s));
}

TEST(Dynamics, YawRateBound)
{
  SystemSpec s;
  s.v_max = 5.0;
  s.yaw_enabled = true;
  s.u_psi_max = 0.5;
  const auto p = propagate(State(2, 2), Control{v2(0, 0), 0.6}, 1.0, 2);
  EXPECT_FALSE(check_dynamic_feasibility(p, s));
}

TEST(Dynamics, TrajectoryEvaluationEnds)
{
  State s(2, 2);
  std::vector<MotionPrimitive> segs;
  for (auto u : {v2(1, 0), v2(0, 1), v2(-1, -1)})
  {
    segs.push_back(propagate(s, Control{u, 0.0}, 1.0, 2));
    s = segs.back().end;
  }
  const Trajectory traj(segs);
  EXPECT_EQ(traj.duration(), 3.0);
  EXPECT_EQ(evaluate_trajectory(traj, 0.0).pos(), segs[0].start.pos());
  EXPECT_LE((evaluate_trajectory(traj, 3.0).pos() - segs[2].end.pos()).norm(), 1e-12);
  EXPECT_EQ(evaluate_trajectory(traj, 1.0).segment, 1u);
  EXPECT_THROW(evaluate_trajectory(traj, -1e-9), std::out_of_range);
  EXPECT_THROW(evaluate_trajectory(traj, 3.0 + 1e-9), std::out_of_range);
  EXPECT_THROW(evaluate_trajectory(Trajectory{}, 0.0), std::out_of_range);
  EXPECT_LE(traj.continuity_error(), 1e-12);
}

TEST(Dynamics, SpecValidation)
{
  SystemSpec s;
  s.du = 4;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.du = 3;
  s.dt = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(DynamicsProperties, MatchesRungeKutta)
{
  props::Rng rng(21);
  const auto t = props::dynamics_rk4_agreement(rng, 100);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(DynamicsProperties, FeasibilityMatchesDenseSampling)
{
  props::Rng rng(22);
  const auto t = props::dynamics_feasibility_vs_dense(rng, 500);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(DynamicsProperties, PropagationComposes)
{
  props::Rng rng(23);
  const auto t = props::dynamics_composition(rng, 1000);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(DynamicsProperties, TrajectoryEvaluation)
{
  props::Rng rng(24);
  const auto t = props::dynamics_trajectory_eval(rng, 100);
  EXPECT_EQ(t.failures, 0) << t.first;
}

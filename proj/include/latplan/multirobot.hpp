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

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "astar.hpp"
#include "polytope.hpp"
#include "search.hpp"

namespace latplan {

struct TeamRobot
{
  int id = 0;
  ConvexPolytope geometry;  ///< body shape around the reference point
  SystemSpec spec;
  State start;
  GoalRegion goal;
  Weights weights;
  double replan_period = 1.0;  ///< seconds, decentralized mode
};

enum class TeamMode
{
  Sequential,
  Decentralized,
};

struct TeamScenario
{
  std::vector<TeamRobot> robots;
  World world;
  TeamMode mode = TeamMode::Sequential;
  double T_max = 60.0;                 ///< per-plan horizon
  int rounds = 200;                    ///< decentralized budget, in ticks of the slowest robot
  std::size_t max_expansions = 1'000'000;

  void validate() const
  {
    std::set<int> ids;
    for (const auto& r : robots)
    {
      if (!ids.insert(r.id).second)
        throw std::invalid_argument("TeamScenario: duplicate robot id");
      if (mode == TeamMode::Decentralized)
      {
        const double steps = r.replan_period / r.spec.dt;
        if (!(r.replan_period > 0.0) || std::abs(steps - std::round(steps)) > 1e-9)
          throw std::invalid_argument("TeamScenario: replan period must be a positive multiple of dt");
      }
    }
    for (std::size_t i = 0; i < robots.size(); ++i)
      for (std::size_t j = i + 1; j < robots.size(); ++j)
      {
        const ConvexPolytope region = minkowski_inflate(robots[j].geometry, robots[i].geometry);
        if (region.contains(robots[i].start.pos() - robots[j].start.pos(), kContactTol))
          throw std::invalid_argument("TeamScenario: robot starts overlap");
      }
  }
};

struct RobotOutcome
{
  PlanStatus status = PlanStatus::NoPath;
  /// Global-time trajectory: planned (sequential) or executed (decentralized).
  Trajectory trajectory;
  bool reached_goal = false;
  std::size_t expansions = 0;
  double planning_time = 0.0;  ///< seconds, summed over all plans
  int plans = 0;
  int failed_plans = 0;
};

struct PairClearance
{
  std::size_t i = 0, j = 0;
  double min_clearance = kInf;
  double at_time = 0.0;
  bool pass = true;
};

struct ClearanceReport
{
  std::vector<PairClearance> pairs;

  bool pass() const
  {
    return std::all_of(pairs.begin(), pairs.end(), [](const PairClearance& p) { return p.pass; });
  }

  double min_clearance() const
  {
    double m = kInf;
    for (const auto& p : pairs)
      m = std::min(m, p.min_clearance);
    return m;
  }
};

struct TeamResult
{
  std::vector<RobotOutcome> robots;
  ClearanceReport clearance;
  double planning_time = 0.0;  ///< seconds, whole team

  bool all_reached() const
  {
    return std::all_of(robots.begin(), robots.end(), [](const RobotOutcome& r) { return r.reached_goal; });
  }
};

/// Position of a robot at global time tau when its trajectory starts at
/// `offset`: held at the first pose before and at the last pose after.
inline Vec position_at(const Trajectory& traj, double offset, double tau)
{
  const double local = std::clamp(tau - offset, 0.0, traj.duration());
  return evaluate_trajectory(traj, local).pos();
}

/// Signed clearance of robot i at p_i against robot j at p_j: the largest
/// normalized face violation of p_i - p_j in (c_j inflated by c_i). Negative
/// means overlap.
inline double signed_clearance(const ConvexPolytope& region, const Vec& d)
{
  double best = -kInf;
  for (const auto& f : region.faces)
    best = std::max(best, (f.a.dot(d) - f.b) / f.a.norm());
  return best;
}

/// Dense-sampling check of every robot pair at `step` seconds over the
/// union of all time windows. Robots before their start or after their end
/// are held at the first or last pose.
inline ClearanceReport verify_pairwise(
  const std::vector<Trajectory>& trajectories, const std::vector<ConvexPolytope>& geometries,
  const std::vector<double>& offsets, double step = 1e-3)
{
  if (trajectories.size() != geometries.size() || trajectories.size() != offsets.size())
    throw std::invalid_argument("verify_pairwise: size mismatch");
  double end = 0.0;
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    end = std::max(end, offsets[i] + trajectories[i].duration());
  const auto n = static_cast<std::size_t>(std::ceil(end / step));

  ClearanceReport report;
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    for (std::size_t j = i + 1; j < trajectories.size(); ++j)
    {
      const ConvexPolytope region = minkowski_inflate(geometries[j], geometries[i]);
      PairClearance pc;
      pc.i = i;
      pc.j = j;
      for (std::size_t k = 0; k <= n; ++k)
      {
        const double tau = std::min(end, k * step);
        const Vec d = position_at(trajectories[i], offsets[i], tau) - position_at(trajectories[j], offsets[j], tau);
        const double c = signed_clearance(region, d);
        if (c < pc.min_clearance)
        {
          pc.min_clearance = c;
          pc.at_time = tau;
        }
      }
      pc.pass = pc.min_clearance > -1e-6;
      report.pairs.push_back(pc);
    }
  return report;
}

namespace detail {

// Zero-control primitive of length dt at `s` with all derivatives cleared.
inline MotionPrimitive hover(const State& s, const SystemSpec& spec)
{
  State r = s;
  for (int k = 1; k < spec.order; ++k)
    r.x[k].setZero();
  Control c;
  c.u = Vec::Zero(spec.dim);
  return propagate(r, c, spec);
}

inline PlanRequest team_request(const TeamScenario& sc, const TeamRobot& r, const State& start)
{
  PlanRequest req;
  req.start = start;
  req.goal = r.goal;
  req.weights = r.weights;
  req.mode = PlanMode::Dynamic;
  req.T_max = sc.T_max;
  req.max_expansions = sc.max_expansions;
  return req;
}

inline std::vector<Trajectory> outcome_trajectories(const TeamResult& res)
{
  std::vector<Trajectory> out;
  for (const auto& r : res.robots)
    out.push_back(r.trajectory);
  return out;
}

} // namespace detail

/// Prioritized planning in list order. Robot i avoids the full committed
/// trajectories of robots 0..i-1, which stay parked at their last pose
/// afterwards. A robot without a plan is treated as parked at its start.
inline TeamResult plan_sequential(const TeamScenario& sc)
{
  sc.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TeamResult res;
  std::vector<Trajectory> committed;

  for (std::size_t i = 0; i < sc.robots.size(); ++i)
  {
    const TeamRobot& r = sc.robots[i];
    State start = r.start;
    start.t = 0.0;
    PlanRequest req = detail::team_request(sc, r, start);
    for (std::size_t j = 0; j < i; ++j)
    {
      RobotConstraint c;
      c.obstacle = RobotObstacle::make(sc.robots[j].geometry, r.geometry, committed[j], 0.0, kInf);
      c.complete_mode = false;
      req.robots.push_back(std::move(c));
    }

    PlanResult pr = plan_astar(PlanningProblem(r.spec, sc.world, req));
    RobotOutcome out;
    out.status = pr.status;
    out.expansions = pr.expansions;
    out.planning_time = pr.runtime;
    out.plans = 1;
    if (pr.success())
    {
      out.reached_goal = true;
      out.trajectory = pr.trajectory.empty() ? Trajectory({detail::hover(start, r.spec)}) : pr.trajectory;
    }
    else
    {
      out.failed_plans = 1;
      spdlog::warn("plan_sequential: robot {} failed ({})", r.id, to_string(pr.status));
      out.trajectory = Trajectory({detail::hover(start, r.spec)});
    }
    committed.push_back(out.trajectory);
    res.robots.push_back(std::move(out));
  }

  std::vector<ConvexPolytope> geoms;
  for (const auto& r : sc.robots)
    geoms.push_back(r.geometry);
  res.clearance = verify_pairwise(committed, geoms, std::vector<double>(committed.size(), 0.0));
  res.planning_time = detail::seconds_since(t0);
  return res;
}

/// Decentralized replanning on a shared global clock.
///
/// Each robot ticks every replan_period seconds; simultaneous ticks run in
/// id order and each commit is visible to the robots ticking after it. At a
/// tick the robot plans from its own committed state and sees every other
/// robot's current trajectory with the time shift tau_i^s - tau_j^s. A
/// moving robot is only considered until it can have reacted: its replan
/// period plus its stopping time.
inline TeamResult plan_decentralized(const TeamScenario& sc)
{
  sc.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = sc.robots.size();

  struct Live
  {
    Trajectory traj;            ///< committed, local time
    double start = 0.0;         ///< global start time of traj
    std::vector<MotionPrimitive> executed;
    double executed_until = 0.0;
    bool finished = false;
  };
  std::vector<Live> live(n);
  TeamResult res;
  res.robots.resize(n);

  for (std::size_t i = 0; i < n; ++i)
  {
    State s = sc.robots[i].start;
    s.t = 0.0;
    live[i].traj = Trajectory({detail::hover(s, sc.robots[i].spec)});
  }

  // Order by id for simultaneous ticks.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sc.robots[a].id < sc.robots[b].id; });

  double max_period = 0.0;
  for (const auto& r : sc.robots)
    max_period = std::max(max_period, r.replan_period);
  const double t_end = sc.rounds * max_period;

  // Lattice state on robot i's committed trajectory at global time tau.
  auto state_at = [&](std::size_t i, double tau) {
    const Live& L = live[i];
    const auto& segs = L.traj.segments();
    const double dt = sc.robots[i].spec.dt;
    const auto k = static_cast<std::size_t>(std::llround((tau - L.start) / dt));
    State s = k == 0 ? segs.front().start : segs[std::min(k, segs.size()) - 1].end;
    if (k > segs.size())
      for (int d = 1; d < sc.robots[i].spec.order; ++d)
        s.x[d].setZero();
    return s;
  };

  // Moves the executed log of robot i forward to global time tau.
  auto execute_until = [&](std::size_t i, double tau) {
    Live& L = live[i];
    const SystemSpec& spec = sc.robots[i].spec;
    while (L.executed_until + 0.5 * spec.dt < tau)
    {
      State s = state_at(i, L.executed_until);
      s.t = L.executed_until;
      const auto k = static_cast<std::size_t>(std::llround((L.executed_until - L.start) / spec.dt));
      if (k < L.traj.size())
        L.executed.push_back(propagate(s, L.traj.segments()[k].control, spec));
      else
        L.executed.push_back(detail::hover(s, spec));
      L.executed_until += spec.dt;
    }
  };

  for (double tau = 0.0; tau <= t_end + 1e-9;)
  {
    for (std::size_t i : order)
    {
      const TeamRobot& r = sc.robots[i];
      const double phase = tau / r.replan_period;
      if (std::abs(phase - std::round(phase)) > 1e-9)
        continue;
      Live& L = live[i];
      if (L.finished)
        continue;
      State start = state_at(i, tau);
      if (res.robots[i].plans > 0 && r.goal.contains(start) && tau >= L.start + L.traj.duration() - 1e-9)
      {
        L.finished = true;
        continue;
      }
      start.t = 0.0;

      PlanRequest req = detail::team_request(sc, r, start);
      for (std::size_t j = 0; j < n; ++j)
      {
        if (j == i)
          continue;
        const Live& O = live[j];
        const double offset = tau - O.start;
        if (offset < -1e-9)
          throw std::logic_error("plan_decentralized: negative start offset");
        const bool planned = res.robots[j].plans > 0;
        const double remaining = planned ? O.traj.duration() - offset : kInf;
        RobotConstraint c;
        if (O.finished || remaining <= 0.0)
        {
          c.obstacle = RobotObstacle::make(sc.robots[j].geometry, r.geometry, O.traj, std::max(0.0, offset), kInf);
          c.complete_mode = false;
        }
        else
        {
          // Robot j reacts to our commit at its next tick at the latest and
          // then needs its stopping time. A robot that has not planned yet
          // rests at its start until then.
          const double reaction = sc.robots[j].replan_period + stopping_cutoff(sc.robots[j].spec, kInf);
          const double horizon = std::min(remaining, reaction);
          Trajectory shared = O.traj;
          if (!planned)
          {
            const SystemSpec& sj = sc.robots[j].spec;
            shared = Trajectory({propagate(O.traj.segments().front().start, Control{Vec::Zero(sj.dim), 0.0},
                                           offset + horizon, sj.order)});
          }
          c.obstacle = RobotObstacle::make(
            sc.robots[j].geometry, r.geometry, std::move(shared), std::max(0.0, offset), offset + horizon);
          // A robot that stops inside the horizon stays where it stopped.
          c.complete_mode = horizon < remaining;
        }
        req.robots.push_back(std::move(c));
      }

      PlanResult pr = plan_astar(PlanningProblem(r.spec, sc.world, req));
      RobotOutcome& out = res.robots[i];
      out.plans += 1;
      out.expansions += pr.expansions;
      out.planning_time += pr.runtime;
      out.status = pr.status;
      if (!pr.success())
      {
        out.failed_plans += 1;
        spdlog::debug("plan_decentralized: robot {} at tau={} failed ({})", r.id, tau, to_string(pr.status));
        continue;
      }
      execute_until(i, tau);
      L.traj = pr.trajectory.empty() ? Trajectory({detail::hover(start, r.spec)}) : pr.trajectory;
      L.start = tau;
    }
    if (std::all_of(live.begin(), live.end(), [](const Live& L) { return L.finished; }))
      break;
    // Next tick time: smallest multiple of any period above tau.
    double next = kInf;
    for (const auto& r : sc.robots)
      next = std::min(next, (std::floor(tau / r.replan_period + 1e-9) + 1.0) * r.replan_period);
    tau = next;
  }

  std::vector<ConvexPolytope> geoms;
  for (std::size_t i = 0; i < n; ++i)
  {
    Live& L = live[i];
    execute_until(i, L.start + L.traj.duration());
    if (L.executed.empty())
      L.executed.push_back(detail::hover(state_at(i, 0.0), sc.robots[i].spec));
    const State last = state_at(i, L.start + L.traj.duration());
    res.robots[i].reached_goal =
      sc.robots[i].goal.contains(last) && res.robots[i].failed_plans < res.robots[i].plans;
    res.robots[i].trajectory = Trajectory(L.executed);
    if (res.robots[i].reached_goal)
      res.robots[i].status = PlanStatus::Success;
    geoms.push_back(sc.robots[i].geometry);
  }
  res.clearance = verify_pairwise(detail::outcome_trajectories(res), geoms, std::vector<double>(n, 0.0));
  res.planning_time = detail::seconds_since(t0);
  return res;
}

inline TeamResult plan_team(const TeamScenario& sc)
{
  return sc.mode == TeamMode::Sequential ? plan_sequential(sc) : plan_decentralized(sc);
}

} // namespace latplan

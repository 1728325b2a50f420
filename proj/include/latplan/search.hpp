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
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/functional/hash.hpp>

#include "dynamics.hpp"
#include "env.hpp"
#include "obstacles.hpp"
#include "yaw.hpp"

namespace latplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Quantized state used for duplicate detection.
struct LatticeKey
{
  std::array<std::int32_t, 16> v{};
  std::uint8_t n = 0;

  void push(std::int32_t x) { v[n++] = x; }

  friend bool operator==(const LatticeKey& a, const LatticeKey& b)
  {
    return a.n == b.n && std::equal(a.v.begin(), a.v.begin() + a.n, b.v.begin());
  }

  friend bool operator<(const LatticeKey& a, const LatticeKey& b)
  {
    return std::lexicographical_compare(a.v.begin(), a.v.begin() + a.n, b.v.begin(), b.v.begin() + b.n);
  }
};

struct LatticeKeyHash
{
  std::size_t operator()(const LatticeKey& k) const
  {
    return boost::hash_range(k.v.begin(), k.v.begin() + k.n);
  }
};

/// Maps states to lattice keys. Positions round to the grid resolution
/// (cell centers), derivative k rounds to the increment one control step
/// produces on it, yaw to one yaw-rate step, and time (dynamic mode only)
/// to the primitive duration.
struct KeyQuantizer
{
  Vec origin;
  double pos_res = 1.0;
  std::array<double, kMaxOrder> deriv_quantum{};
  int order = 2;
  double yaw_quantum = 0.0;
  double time_quantum = 0.0;

  static KeyQuantizer make(const SystemSpec& spec, const GridGeometry& g, bool time_augmented)
  {
    KeyQuantizer q;
    q.origin = g.origin;
    q.pos_res = g.resolution;
    q.order = spec.order;
    for (int k = 1; k < spec.order; ++k)
      q.deriv_quantum[k] = spec.u_step() * std::pow(spec.dt, spec.order - k) / factorial(spec.order - k);
    if (spec.yaw_enabled && spec.du_psi > 1)
      q.yaw_quantum = spec.u_psi_step() * spec.dt;
    if (time_augmented)
      q.time_quantum = spec.dt;
    return q;
  }

  LatticeKey operator()(const State& s) const
  {
    LatticeKey key;
    const int m = s.dim();
    for (int a = 0; a < m; ++a)
      key.push(static_cast<std::int32_t>(std::lround((s.x[0][a] - origin[a]) / pos_res - 0.5)));
    for (int k = 1; k < order; ++k)
      for (int a = 0; a < m; ++a)
        key.push(static_cast<std::int32_t>(std::lround(s.x[k][a] / deriv_quantum[k])));
    if (yaw_quantum > 0.0)
      key.push(static_cast<std::int32_t>(std::lround(wrap_angle(s.yaw) / yaw_quantum)));
    if (time_quantum > 0.0)
      key.push(static_cast<std::int32_t>(std::lround(s.t / time_quantum)));
    return key;
  }
};

/// Goal set: position inside an axis-aligned box around `center` and the
/// norm of each constrained derivative below its tolerance.
struct GoalRegion
{
  Vec center;
  double pos_tol = 0.0;
  /// deriv_tol[k-1] bounds |x^(k)|; missing entries are unconstrained.
  std::vector<double> deriv_tol;

  bool contains(const State& s) const
  {
    constexpr double slack = 1e-9;
    if ((s.x[0] - center).cwiseAbs().maxCoeff() > pos_tol + slack)
      return false;
    for (std::size_t k = 0; k < deriv_tol.size(); ++k)
    {
      const Vec& d = s.x[k + 1];
      if (d.size() > 0 && d.norm() > deriv_tol[k] + slack)
        return false;
    }
    return true;
  }
};

enum class PlanMode
{
  Static,
  Dynamic,
};

struct Weights
{
  double rho_T = 1.0;
  double rho_c = 0.0;
  double rho_psi = 0.0;
};

/// Per-edge (or per-trajectory) cost decomposition.
struct CostTerms
{
  double effort = 0.0;     ///< J_q, integral of |u|^2
  double duration = 0.0;   ///< T
  double collision = 0.0;  ///< J_c
  double yaw = 0.0;        ///< J_psi

  double total(const Weights& w) const
  {
    return effort + w.rho_T * duration + w.rho_c * collision + w.rho_psi * yaw;
  }

  CostTerms& operator+=(const CostTerms& o)
  {
    effort += o.effort;
    duration += o.duration;
    collision += o.collision;
    yaw += o.yaw;
    return *this;
  }
};

/// Another robot's shared trajectory plus how to treat it past its cutoff.
struct RobotConstraint
{
  RobotObstacle obstacle;
  bool complete_mode = false;
};

struct PlanRequest
{
  State start;
  GoalRegion goal;
  Weights weights;
  double theta = 2.0 * kPi;  ///< sensor FOV; >= 2 pi disables the hard bound
  std::shared_ptr<const Tunnel> tunnel;
  double T_max = kInf;      ///< horizon, relative to start.t (dynamic mode)
  PlanMode mode = PlanMode::Static;
  std::vector<LVP> obstacles;
  std::vector<RobotConstraint> robots;
  std::size_t max_expansions = 1'000'000;
};

enum class PlanStatus
{
  Success,
  NoPath,
  HorizonExceeded,
};

inline const char* to_string(PlanStatus s)
{
  switch (s)
  {
    case PlanStatus::Success: return "Success";
    case PlanStatus::NoPath: return "NoPath";
    case PlanStatus::HorizonExceeded: return "HorizonExceeded";
  }
  return "?";
}

struct PlanResult
{
  Trajectory trajectory;
  double total_cost = kInf;
  CostTerms terms;
  std::size_t expansions = 0;
  double runtime = 0.0;  ///< seconds
  PlanStatus status = PlanStatus::NoPath;

  bool success() const { return status == PlanStatus::Success; }
};

/// Why a primitive was not admitted as an edge.
enum class EdgeStatus
{
  Valid,
  Infeasible,     ///< dynamics, tunnel or FOV; independent of the map
  BeyondHorizon,  ///< ends after the planning horizon
  Blocked,        ///< collides with the current map or moving obstacles
};

struct Successor
{
  std::size_t control = 0;
  MotionPrimitive primitive;
  CostTerms terms;
  double cost = 0.0;
};

/// Everything a search needs about one planning query: system, static
/// workspace snapshot, request, and the derived control set and quantizer.
class PlanningProblem
{
public:
  PlanningProblem(SystemSpec spec, World world, PlanRequest req)
  : _spec(std::move(spec))
  , _world(std::move(world))
  , _req(std::move(req))
  {
    _spec.validate();
    if (!_world.grid)
      throw std::invalid_argument("PlanningProblem: world has no grid");
    if (_req.mode == PlanMode::Dynamic && !(_req.T_max > 0.0))
      throw std::invalid_argument("PlanningProblem: dynamic mode needs T_max > 0");
    if (!(_req.goal.pos_tol > 0.0))
      throw std::invalid_argument("PlanningProblem: goal tolerance must be positive");
    _controls = generate_control_set(_spec);
    _quant = KeyQuantizer::make(_spec, _world.grid->geometry, _req.mode == PlanMode::Dynamic);
  }

  const SystemSpec& spec() const { return _spec; }
  const World& world() const { return _world; }
  const PlanRequest& request() const { return _req; }
  const std::vector<Control>& controls() const { return _controls; }
  const KeyQuantizer& quantizer() const { return _quant; }

  void set_world(World w) { _world = std::move(w); }
  void set_obstacles(std::vector<LVP> obs) { _req.obstacles = std::move(obs); }
  void set_start(State s) { _req.start = std::move(s); }

  LatticeKey key(const State& s) const { return _quant(s); }

  double horizon_end() const
  {
    return _req.mode == PlanMode::Dynamic ? _req.start.t + _req.T_max : kInf;
  }

  /// Lower bound on cost-to-go: rho_T times the straight-line minimum time
  /// to reach the goal box at full speed.
  double heuristic(const State& s) const
  {
    double worst = 0.0;
    for (int a = 0; a < s.dim(); ++a)
    {
      const double gap = std::abs(s.x[0][a] - _req.goal.center[a]) - _req.goal.pos_tol;
      worst = std::max(worst, gap);
    }
    return _req.weights.rho_T * worst / _spec.v_max;
  }

  /// Inside the goal region and, in dynamic mode, able to stay parked there
  /// without being hit by another robot that is held static at its end.
  bool is_goal(const State& s) const
  {
    if (!_req.goal.contains(s))
      return false;
    return _req.mode != PlanMode::Dynamic || parked_safe(s);
  }

  bool parked_safe(const State& s) const
  {
    for (const auto& r : _req.robots)
    {
      if (r.complete_mode)
        continue;
      const RobotObstacle& ro = r.obstacle;
      const double end = std::clamp(ro.cutoff, 0.0, ro.traj.duration());
      const double hold = std::max(0.0, end - (s.t + ro.start_offset)) + _spec.dt;
      State parked = s;
      for (int k = 1; k < _spec.order; ++k)
        parked.x[k].setZero();
      Control c;
      c.u = Vec::Zero(s.dim());
      if (primitive_intersects_robot(propagate(parked, c, hold, _spec.order), ro, s.t, false))
        return false;
    }
    return true;
  }

  int cost_samples(const MotionPrimitive& p) const
  {
    const double res = _world.potential ? _world.potential->geometry.resolution
                                        : _world.grid->geometry.resolution;
    return sample_count(p, _spec, res);
  }

  /// Map-independent admission: dynamics, horizon, tunnel and FOV.
  EdgeStatus check_static(const MotionPrimitive& p) const
  {
    if (!check_dynamic_feasibility(p, _spec))
      return EdgeStatus::Infeasible;
    if (_req.tunnel && !in_tunnel(p, *_req.tunnel, collision_sample_count(p, _spec, _world.grid->geometry.resolution)))
      return EdgeStatus::Infeasible;
    if (_spec.yaw_enabled && !fov_feasible(p, _req.theta))
      return EdgeStatus::Infeasible;
    if (p.end.t > horizon_end() + 1e-9)
      return EdgeStatus::BeyondHorizon;
    return EdgeStatus::Valid;
  }

  /// Map-dependent admission: static grid and moving obstacles.
  EdgeStatus check_map(const MotionPrimitive& p) const
  {
    if (primitive_collides_static(p, *_world.grid, _spec))
      return EdgeStatus::Blocked;
    if (_req.mode == PlanMode::Dynamic)
    {
      for (const auto& o : _req.obstacles)
        if (primitive_intersects_lvp(p, o, p.start.t))
          return EdgeStatus::Blocked;
      for (const auto& r : _req.robots)
        if (primitive_intersects_robot(p, r.obstacle, p.start.t, r.complete_mode))
          return EdgeStatus::Blocked;
    }
    return EdgeStatus::Valid;
  }

  CostTerms terms(const MotionPrimitive& p) const
  {
    CostTerms c;
    c.effort = p.control.u.squaredNorm() * p.dt;
    c.duration = p.dt;
    if (_world.potential)
      c.collision = collision_cost(p, *_world.potential, cost_samples(p));
    if (_spec.yaw_enabled)
      c.yaw = yaw_cost(p, cost_samples(p));
    return c;
  }

  /// Edge cost of an admitted primitive.
  double cost(const CostTerms& t) const { return t.total(_req.weights); }

  /// Valid successors of s, in control-set order. Sets `horizon_hit` when a
  /// successor was dropped only because it ends past the horizon.
  std::vector<Successor> expand(const State& s, bool* horizon_hit = nullptr) const
  {
    std::vector<Successor> out;
    const LatticeKey own = key(s);
    for (std::size_t i = 0; i < _controls.size(); ++i)
    {
      MotionPrimitive p = propagate(s, _controls[i], _spec);
      const EdgeStatus st = check_static(p);
      if (st == EdgeStatus::BeyondHorizon && horizon_hit)
        *horizon_hit = true;
      if (st != EdgeStatus::Valid || check_map(p) != EdgeStatus::Valid)
        continue;
      if (_req.mode == PlanMode::Static && key(p.end) == own)
        continue;
      Successor succ;
      succ.control = i;
      succ.terms = terms(p);
      succ.cost = cost(succ.terms);
      succ.primitive = std::move(p);
      out.push_back(std::move(succ));
    }
    return out;
  }

  /// Re-checks a finished trajectory with the planner's own constraints and
  /// returns its cost decomposition. Throws if a segment is inadmissible.
  CostTerms audit(const Trajectory& traj) const
  {
    if (traj.continuity_error() > 1e-9)
      throw std::logic_error("planner produced a discontinuous trajectory");
    CostTerms total;
    for (const auto& seg : traj.segments())
    {
      if (check_static(seg) != EdgeStatus::Valid || check_map(seg) != EdgeStatus::Valid)
        throw std::logic_error("planner produced an inadmissible segment");
      total += terms(seg);
    }
    return total;
  }

private:
  SystemSpec _spec;
  World _world;
  PlanRequest _req;
  std::vector<Control> _controls;
  KeyQuantizer _quant;
};

/// Free-function form of PlanningProblem::expand.
inline std::vector<Successor> expand(const PlanningProblem& problem, const State& s)
{
  return problem.expand(s);
}

inline double heuristic(const PlanningProblem& problem, const State& s) { return problem.heuristic(s); }

} // namespace latplan

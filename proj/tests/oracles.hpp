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

// Reference implementations used only by the tests. Each one recomputes a
// quantity by a slow, direct method that shares no code path with the
// library routine it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "latplan/grid.hpp"
#include "latplan/multirobot.hpp"
#include "latplan/obstacles.hpp"
#include "latplan/search.hpp"

namespace oracle {

using latplan::Vec;
constexpr double inf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- poly

// Naive power-sum evaluation.
inline double power_eval(const std::vector<double>& c, double t)
{
  double s = 0.0, tp = 1.0;
  for (double ci : c)
  {
    s += ci * tp;
    tp *= t;
  }
  return s;
}

// Roots on [lo, hi] by a uniform sign scan with bisection, plus touching
// roots found as near-zero local minima of |p| refined by golden section.
inline std::vector<double> sign_scan_roots(const std::vector<double>& c, double lo, double hi, double step)
{
  std::vector<double> out;
  auto f = [&](double t) { return power_eval(c, t); };
  double scale = 0.0;
  for (double x : c)
    scale = std::max(scale, std::abs(x));
  const double zero = 1e-9 * (1.0 + scale);

  auto refine = [&](double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 200 && b - a > 1e-15; ++i)
    {
      const double m = 0.5 * (a + b);
      const double fm = f(m);
      if ((fm < 0) == (fa < 0))
      {
        a = m;
        fa = fm;
      }
      else
        b = m;
    }
    return 0.5 * (a + b);
  };
  auto golden_min = [&](double a, double b) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    for (int i = 0; i < 200 && b - a > 1e-14; ++i)
    {
      if (std::abs(f(x1)) < std::abs(f(x2)))
      {
        b = x2;
        x2 = x1;
        x1 = b - g * (b - a);
      }
      else
      {
        a = x1;
        x1 = x2;
        x2 = a + g * (b - a);
      }
    }
    return 0.5 * (a + b);
  };

  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  std::vector<double> ts(n + 1), fs(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
  {
    ts[i] = std::min(hi, lo + i * step);
    fs[i] = f(ts[i]);
  }
  for (std::size_t i = 0; i <= n; ++i)
  {
    if (fs[i] == 0.0)
      out.push_back(ts[i]);
    if (i < n && fs[i] != 0.0 && fs[i + 1] != 0.0 && (fs[i] < 0) != (fs[i + 1] < 0))
      out.push_back(refine(ts[i], ts[i + 1]));
    // |p| has a local minimum without a sign change: possible double root.
    if (i > 0 && i < n && std::abs(fs[i]) <= std::abs(fs[i - 1]) && std::abs(fs[i]) <= std::abs(fs[i + 1]) &&
        (fs[i - 1] < 0) == (fs[i + 1] < 0))
    {
      const double t = golden_min(ts[i - 1], ts[i + 1]);
      if (std::abs(f(t)) <= zero)
        out.push_back(t);
    }
  }
  // Endpoints that are numerically zero.
  for (double t : {lo, hi})
    if (std::abs(f(t)) <= zero)
      out.push_back(t);
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  for (double r : out)
    if (merged.empty() || r - merged.back() > 1e-6)
      merged.push_back(r);
  return merged;
}

// ---------------------------------------------------------------- dynamics

// Classic RK4 on the chain of integrators x_k' = x_{k+1}, x_{q-1}' = u.
inline std::vector<Vec> rk4_end(const std::vector<Vec>& x0, const Vec& u, double T, double h)
{
  const std::size_t q = x0.size();
  auto rhs = [&](const std::vector<Vec>& x) {
    std::vector<Vec> d(q);
    for (std::size_t k = 0; k + 1 < q; ++k)
      d[k] = x[k + 1];
    d[q - 1] = u;
    return d;
  };
  auto axpy = [&](const std::vector<Vec>& x, const std::vector<Vec>& k, double s) {
    std::vector<Vec> r(q);
    for (std::size_t i = 0; i < q; ++i)
      r[i] = x[i] + s * k[i];
    return r;
  };
  std::vector<Vec> x = x0;
  const auto steps = static_cast<int>(std::llround(T / h));
  const double hh = T / steps;
  for (int s = 0; s < steps; ++s)
  {
    const auto k1 = rhs(x);
    const auto k2 = rhs(axpy(x, k1, 0.5 * hh));
    const auto k3 = rhs(axpy(x, k2, 0.5 * hh));
    const auto k4 = rhs(axpy(x, k3, hh));
    for (std::size_t i = 0; i < q; ++i)
      x[i] += hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return x;
}

// Largest |k-th derivative| per axis over dense samples, k in [1, q-1].
inline bool dense_feasible(const latplan::MotionPrimitive& p, const latplan::SystemSpec& spec, double step, double tol)
{
  const auto n = static_cast<int>(std::ceil(p.dt / step));
  for (int i = 0; i <= n; ++i)
  {
    const double t = std::min(p.dt, i * step);
    for (int k = 1; k < p.order; ++k)
    {
      const Vec d = p.derivative(t, k);
      if (d.cwiseAbs().maxCoeff() > spec.bound(k) + tol)
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- env

// Nearest occupied cell center by exhaustive scan.
inline std::vector<double> brute_distance(const latplan::OccupancyGrid& g)
{
  const std::size_t n = g.geometry.cell_count();
  std::vector<Vec> occ;
  for (std::size_t i = 0; i < n; ++i)
    if (g.cells[i] == latplan::Cell::Occupied)
      occ.push_back(g.geometry.center(g.geometry.unlinear(i)));
  std::vector<double> d(n, inf);
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vec c = g.geometry.center(g.geometry.unlinear(i));
    for (const Vec& o : occ)
      d[i] = std::min(d[i], (c - o).norm());
  }
  return d;
}

// Cell index computed directly from the geometry fields.
inline long cell_index(const latplan::GridGeometry& g, const Vec& p)
{
  long lin = 0, stride = 1;
  for (int a = 0; a < static_cast<int>(g.dims.size()); ++a)
  {
    const double f = std::floor((p[a] - g.origin[a]) / g.resolution);
    if (f < 0 || f >= g.dims[a])
      return -1;
    lin += static_cast<long>(f) * stride;
    stride *= g.dims[a];
  }
  return lin;
}

// Line integral of U along the primitive with a fine midpoint rule.
inline double fine_collision_cost(const latplan::MotionPrimitive& p, const latplan::PotentialField& pf, int n)
{
  double acc = 0.0;
  const double h = p.dt / n;
  for (int i = 0; i < n; ++i)
  {
    const double t = (i + 0.5) * h;
    const long c = cell_index(pf.geometry, p.position(t));
    const double u = c < 0 ? 0.0 : pf.U[static_cast<std::size_t>(c)];
    acc += u * p.velocity(t).norm() * h;
  }
  return acc;
}

// ---------------------------------------------------------------- obstacles

// Signed clearance of point x to a polytope with time-varying offsets:
// positive outside, the largest normalized face violation.
inline double face_clearance(const std::vector<latplan::Face>& faces, const Vec& x)
{
  double c = -inf;
  for (const auto& f : faces)
    c = std::max(c, (f.a.dot(x) - f.b) / f.a.norm());
  return c;
}

struct DenseVerdict
{
  bool hit = false;
  double min_clearance = inf;
};

// Samples the primitive against an LVP at `step` over the activity window.
inline DenseVerdict dense_lvp(const latplan::MotionPrimitive& p, const latplan::LVP& o, double t_start, double step)
{
  DenseVerdict v;
  const double lo = std::max(0.0, o.active_from - t_start);
  const double hi = std::min(p.dt, o.active_until - t_start);
  if (hi < lo)
    return v;
  const auto n = static_cast<int>(std::ceil((hi - lo) / step));
  for (int i = 0; i <= n; ++i)
  {
    const double t = std::min(hi, lo + i * step);
    std::vector<latplan::Face> faces = o.shape.faces;
    for (auto& f : faces)
      f.b += (f.a.dot(o.v_c) + f.a.norm() * o.v_e) * (t_start + t - o.epoch);
    const double c = face_clearance(faces, p.position(t));
    v.min_clearance = std::min(v.min_clearance, c);
    if (c <= 0.0)
      v.hit = true;
  }
  return v;
}

// Samples the primitive against another robot's trajectory.
inline DenseVerdict dense_robot(
  const latplan::MotionPrimitive& p, const latplan::RobotObstacle& ro, double t_start, bool complete_mode, double step)
{
  DenseVerdict v;
  const double horizon = std::clamp(ro.cutoff, 0.0, ro.traj.duration());
  const auto n = static_cast<int>(std::ceil(p.dt / step));
  for (int i = 0; i <= n; ++i)
  {
    const double t = std::min(p.dt, i * step);
    const double other = t_start + ro.start_offset + t;
    if (other > horizon && complete_mode)
      continue;
    const double tt = std::min(other, horizon);
    if (tt < 0.0)
      continue;
    const Vec c = latplan::evaluate_trajectory(ro.traj, tt).pos();
    const double cl = face_clearance(ro.geometry.faces, p.position(t) - c);
    v.min_clearance = std::min(v.min_clearance, cl);
    if (cl <= 0.0)
      v.hit = true;
  }
  return v;
}

// x in A (+) B by testing x - b in A for b over a dense sample of B.
inline bool minkowski_member(const latplan::ConvexPolytope& A, const std::vector<Vec>& b_samples, const Vec& x)
{
  for (const Vec& b : b_samples)
    if (A.contains(x - b, 1e-12))
      return true;
  return false;
}

// Dense sample of a 2D polytope: its vertices, edge points and a grid.
inline std::vector<Vec> sample_polytope_2d(const latplan::ConvexPolytope& B, int n)
{
  std::vector<Vec> out = B.vertices;
  const std::size_t nv = B.vertices.size();
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t j = i + 1; j < nv; ++j)
      for (int k = 1; k < n; ++k)
      {
        const Vec q = B.vertices[i] + (B.vertices[j] - B.vertices[i]) * (double(k) / n);
        if (B.contains(q, 1e-9))
          out.push_back(q);
      }
  return out;
}

// ---------------------------------------------------------------- search

struct EnumProblem
{
  latplan::SystemSpec spec;        // q = 2 only
  const latplan::OccupancyGrid* grid = nullptr;
  Vec start_pos, start_vel;
  Vec goal_center;
  double goal_pos_tol = 0.5;
  double goal_vel_tol = inf;
  double rho_T = 1.0;
  int depth = 6;
};

// Depth-bounded exhaustive search over control sequences for a second-order
// system, with its own propagation, bound and sample-based collision
// checks. Branch-and-bound prunes only sequences that cannot beat the
// incumbent because every step costs at least rho_T * dt.
inline double enumerate_best(const EnumProblem& P)
{
  const auto& s = P.spec;
  const int m = s.dim;
  std::vector<Vec> controls;
  const int total = static_cast<int>(std::pow(s.du, m));
  for (int idx = 0; idx < total; ++idx)
  {
    Vec u(m);
    int rem = idx;
    for (int a = 0; a < m; ++a)
    {
      const int level = rem % s.du;
      rem /= s.du;
      u[a] = -s.u_max + level * (2.0 * s.u_max / (s.du - 1));
      if (2 * level == s.du - 1)
        u[a] = 0.0;
    }
    controls.push_back(u);
  }
  const int I = std::max(2, static_cast<int>(std::ceil(s.v_max * s.dt / P.grid->geometry.resolution - 1e-9)));
  const int samples = 2 * I;

  auto in_goal = [&](const Vec& x, const Vec& v) {
    return (x - P.goal_center).cwiseAbs().maxCoeff() <= P.goal_pos_tol + 1e-9 && v.norm() <= P.goal_vel_tol + 1e-9;
  };
  auto blocked = [&](const Vec& x, const Vec& v, const Vec& u) {
    for (int i = 0; i < samples; ++i)
    {
      const double t = s.dt * i / (samples - 1);
      const Vec p = x + v * t + 0.5 * u * t * t;
      const long c = cell_index(P.grid->geometry, p);
      if (c < 0 || P.grid->cells[static_cast<std::size_t>(c)] == latplan::Cell::Occupied)
        return true;
    }
    return false;
  };

  double best = inf;
  std::function<void(const Vec&, const Vec&, double, int)> dfs = [&](const Vec& x, const Vec& v, double cost, int d) {
    if (in_goal(x, v))
    {
      best = std::min(best, cost);
      return;
    }
    if (d == P.depth)
      return;
    if (cost + P.rho_T * s.dt >= best)
      return;
    for (const Vec& u : controls)
    {
      const Vec v1 = v + u * s.dt;
      if (v1.cwiseAbs().maxCoeff() > s.v_max + 1e-9)
        continue;
      if (blocked(x, v, u))
        continue;
      const Vec x1 = x + v * s.dt + 0.5 * u * s.dt * s.dt;
      dfs(x1, v1, cost + u.squaredNorm() * s.dt + P.rho_T * s.dt, d + 1);
    }
  };
  dfs(P.start_pos, P.start_vel, 0.0, 0);
  return best;
}

// Whole-trajectory re-validation by dense sampling: per-axis derivative
// bounds and static grid occupancy at `step`.
inline bool dense_trajectory_ok(
  const latplan::Trajectory& traj, const latplan::SystemSpec& spec, const latplan::OccupancyGrid& grid, double step)
{
  for (const auto& seg : traj.segments())
  {
    if (!dense_feasible(seg, spec, step, 1e-6))
      return false;
    const auto n = static_cast<int>(std::ceil(seg.dt / step));
    for (int i = 0; i <= n; ++i)
    {
      const long c = cell_index(grid.geometry, seg.position(std::min(seg.dt, i * step)));
      if (c < 0 ? grid.bounded_workspace : grid.cells[static_cast<std::size_t>(c)] == latplan::Cell::Occupied)
        return false;
    }
  }
  return true;
}

// Minimum clearance of a trajectory to occupied cell centers (nearest
// center distance), sampled at `step`.
inline double min_clearance_to_cells(const latplan::Trajectory& traj, const latplan::OccupancyGrid& grid, double step)
{
  std::vector<Vec> occ;
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (grid.cells[i] == latplan::Cell::Occupied)
      occ.push_back(grid.geometry.center(grid.geometry.unlinear(i)));
  double best = inf;
  for (const auto& seg : traj.segments())
  {
    const auto n = static_cast<int>(std::ceil(seg.dt / step));
    for (int i = 0; i <= n; ++i)
    {
      const Vec p = seg.position(std::min(seg.dt, i * step));
      for (const Vec& o : occ)
        best = std::min(best, (p - o).norm());
    }
  }
  return best;
}

} // namespace oracle

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
#include <limits>
#include <vector>

#include <spdlog/spdlog.h>

#include "dynamics.hpp"
#include "poly.hpp"
#include "polytope.hpp"

namespace latplan {

/// Membership tolerance on face inequalities; grazing contact collides.
inline constexpr double kContactTol = 1e-9;

/// Root tolerance used by the face-polynomial collision tests.
inline constexpr double kCollisionRootTol = 1e-10;

/// Convex obstacle translating at constant velocity v_c while every face
/// moves outward at rate v_e. The shape is given at time `epoch`.
struct LinearVelocityPolyhedron
{
  ConvexPolytope shape;
  Vec v_c;
  double v_e = 0.0;
  double epoch = 0.0;
  double active_from = 0.0;
  double active_until = std::numeric_limits<double>::infinity();

  /// Rate of change of face j's offset.
  double face_rate(std::size_t j) const
  {
    const auto& f = shape.faces[j];
    return f.a.dot(v_c) + f.a.norm() * v_e;
  }

  /// Offset of face j at absolute time t.
  double face_offset_at(std::size_t j, double t) const
  {
    return shape.faces[j].b + face_rate(j) * (t - epoch);
  }

  std::vector<Face> faces_at(double t) const
  {
    std::vector<Face> out = shape.faces;
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j].b = face_offset_at(j, t);
    return out;
  }

  ConvexPolytope shape_at(double t) const { return ConvexPolytope::from_faces(faces_at(t)); }

  bool active_at(double t) const { return t >= active_from && t <= active_until; }
};

using LVP = LinearVelocityPolyhedron;

namespace detail {

// Decides whether {t in [lo, hi] : f_j(t) <= 0 for all j} is non-empty.
// The set is a union of closed intervals whose ends are lo, hi or roots of
// some f_j; probing those candidates plus the midpoints between them is
// exact up to the root tolerance.
inline bool faces_intersect(const std::vector<Polynomial>& face_polys, double lo, double hi)
{
  if (hi < lo)
    return false;
  std::vector<double> candidates{lo, hi};
  std::vector<const Polynomial*> live;
  for (const auto& f : face_polys)
  {
    const RootSet rs = real_roots_in_interval(f, lo, hi, kCollisionRootTol);
    // Identically zero: the face is tight forever and never excludes.
    if (rs.everywhere_zero)
      continue;
    live.push_back(&f);
    candidates.insert(candidates.end(), rs.roots.begin(), rs.roots.end());
  }
  if (live.empty())
    return true;

  std::sort(candidates.begin(), candidates.end());
  const std::size_t n = candidates.size();
  for (std::size_t i = 0; i < n; ++i)
    candidates.push_back(i + 1 < n ? 0.5 * (candidates[i] + candidates[i + 1]) : candidates[i]);

  for (double t : candidates)
  {
    bool inside = true;
    for (const Polynomial* f : live)
      if ((*f)(t) > kContactTol)
      {
        inside = false;
        break;
      }
    if (inside)
      return true;
  }
  return false;
}

} // namespace detail

/// Exact test of a primitive (starting at absolute time t_start) against a
/// linearly moving polyhedron, restricted to its activity window.
inline bool primitive_intersects_lvp(const MotionPrimitive& p, const LVP& lvp, double t_start)
{
  const double lo = std::max(0.0, lvp.active_from - t_start);
  const double hi = std::min(p.dt, lvp.active_until - t_start);
  if (hi < lo)
    return false;

  std::vector<Polynomial> face_polys;
  face_polys.reserve(lvp.shape.faces.size());
  for (std::size_t j = 0; j < lvp.shape.faces.size(); ++j)
  {
    const auto& f = lvp.shape.faces[j];
    Polynomial g;
    for (int a = 0; a < p.dim(); ++a)
      g += f.a[a] * p.axis[a];
    // b_j(t_start + t) as a polynomial in local t
    const double rate = lvp.face_rate(j);
    g -= Polynomial({lvp.face_offset_at(j, t_start), rate});
    face_polys.push_back(std::move(g));
  }
  return detail::faces_intersect(face_polys, lo, hi);
}

/// Another robot, seen by the planning robot as a polytope following a
/// piecewise-polynomial trajectory.
///
/// `geometry` is the other robot's shape already Minkowski-inflated by the
/// planning robot's shape, centered on the other robot's reference point.
/// The other robot's local time is the planner's time plus `start_offset`.
struct RobotObstacle
{
  ConvexPolytope geometry;
  Trajectory traj;
  double start_offset = 0.0;
  double cutoff = std::numeric_limits<double>::infinity();

  static RobotObstacle make(
    const ConvexPolytope& other_shape, const ConvexPolytope& own_shape,
    Trajectory traj, double start_offset, double cutoff)
  {
    if (start_offset < 0.0)
      throw std::invalid_argument("RobotObstacle: start_offset must be non-negative");
    RobotObstacle ro;
    ro.geometry = minkowski_inflate(other_shape, own_shape);
    ro.traj = std::move(traj);
    ro.start_offset = start_offset;
    ro.cutoff = std::min(cutoff, ro.traj.duration());
    return ro;
  }

  /// Last pose that is checked: the trajectory at the cutoff.
  Vec final_pose() const
  {
    return evaluate_trajectory(traj, std::clamp(cutoff, 0.0, traj.duration())).pos();
  }
};

/// Exact test of a primitive against a robot obstacle. Past the cutoff the
/// other robot is ignored when `complete_mode` is set, otherwise it is held
/// static at its cutoff pose.
inline bool primitive_intersects_robot(
  const MotionPrimitive& p, const RobotObstacle& ro, double t_start, bool complete_mode)
{
  const int m = p.dim();
  const auto& faces = ro.geometry.faces;
  const double shift = t_start + ro.start_offset;  // other's local time at t = 0
  const double horizon = std::clamp(ro.cutoff, 0.0, ro.traj.duration());
  const auto& knots = ro.traj.knots();
  const auto& segs = ro.traj.segments();

  for (std::size_t n = 0; n < segs.size(); ++n)
  {
    const double seg_lo = knots[n];
    const double seg_hi = std::min(knots[n + 1], horizon);
    if (seg_hi < seg_lo)
      break;
    const double lo = std::max(0.0, seg_lo - shift);
    const double hi = std::min(p.dt, seg_hi - shift);
    if (hi < lo)
      continue;

    std::vector<Polynomial> face_polys;
    face_polys.reserve(faces.size());
    for (const auto& f : faces)
    {
      Polynomial g = Polynomial::constant(-f.b);
      for (int a = 0; a < m; ++a)
        g += f.a[a] * (p.axis[a] - segs[n].axis[a].shifted(shift - seg_lo));
      face_polys.push_back(std::move(g));
    }
    if (detail::faces_intersect(face_polys, lo, hi))
      return true;
  }

  if (complete_mode)
    return false;

  const double lo = std::max(0.0, horizon - shift);
  if (lo > p.dt)
    return false;
  const Vec pose = ro.final_pose();
  std::vector<Polynomial> face_polys;
  for (const auto& f : faces)
  {
    Polynomial g = Polynomial::constant(-f.b - f.a.dot(pose));
    for (int a = 0; a < m; ++a)
      g += f.a[a] * p.axis[a];
    face_polys.push_back(std::move(g));
  }
  return detail::faces_intersect(face_polys, lo, p.dt);
}

/// Horizon after which another robot's shared trajectory is ignored: the
/// time to stop from full speed, min(v_max / a_max, T). Only defined for
/// second-order systems; other orders keep the full trajectory.
inline double stopping_cutoff(const SystemSpec& spec, double T)
{
  if (spec.order != 2)
  {
    spdlog::warn("stopping_cutoff: no rule for order {}, using full duration", spec.order);
    return T;
  }
  if (spec.v_max <= 0.0)
    return 0.0;
  return std::min(spec.v_max / spec.a_max, T);
}

} // namespace latplan

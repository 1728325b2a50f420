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

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "dynamics.hpp"
#include "grid.hpp"

namespace latplan {

/// Number of uniform time samples used to integrate along a primitive:
/// ceil(v_max dt / r_M), never fewer than two (both endpoints).
inline int sample_count(double dt, double v_max, double resolution)
{
  const double raw = v_max * dt / resolution;
  const int n = static_cast<int>(std::ceil(raw - 1e-9));
  return std::max(2, n);
}

inline int sample_count(const MotionPrimitive& p, const SystemSpec& spec, double resolution)
{
  return sample_count(p.dt, spec.v_max, resolution);
}

/// Line integral of the potential along a primitive, sum of U(p_i)|v_i| dt_i
/// over `samples` uniform points with trapezoid end weights.
inline double collision_cost(const MotionPrimitive& p, const PotentialField& pf, int samples)
{
  const double step = p.dt / (samples - 1);
  double acc = 0.0;
  for (int i = 0; i < samples; ++i)
  {
    const double t = i * step;
    const double u = pf.at(p.position(t));
    if (u == 0.0)
      continue;
    const double w = (i == 0 || i == samples - 1) ? 0.5 : 1.0;
    acc += w * u * p.velocity(t).norm();
  }
  return acc * step;
}

inline double collision_cost(const MotionPrimitive& p, const PotentialField& pf, const SystemSpec& spec)
{
  return collision_cost(p, pf, sample_count(p, spec, pf.geometry.resolution));
}

/// Point-sampled static collision test over `samples` uniform points.
inline bool primitive_collides_static(const MotionPrimitive& p, const OccupancyGrid& grid, int samples)
{
  const double step = p.dt / (samples - 1);
  for (int i = 0; i < samples; ++i)
    if (grid.occupied(p.position(i * step)))
      return true;
  return false;
}

/// Collision sampling doubles the cost-integration sample count.
inline int collision_sample_count(const MotionPrimitive& p, const SystemSpec& spec, double resolution)
{
  return 2 * sample_count(p, spec, resolution);
}

inline bool primitive_collides_static(const MotionPrimitive& p, const OccupancyGrid& grid, const SystemSpec& spec)
{
  return primitive_collides_static(p, grid, collision_sample_count(p, spec, grid.geometry.resolution));
}

/// Search region of radius r around a reference trajectory.
class Tunnel
{
public:
  Tunnel(Trajectory ref, double radius, double max_step)
  : _ref(std::move(ref))
  , _radius(radius)
  {
    if (!(radius > 0.0))
      throw std::invalid_argument("Tunnel: radius must be positive");
    if (!(max_step > 0.0))
      throw std::invalid_argument("Tunnel: sampling step must be positive");
    if (_ref.empty())
      throw std::invalid_argument("Tunnel: empty reference trajectory");

    // Sample each segment finely enough that consecutive polyline points
    // are at most max_step apart.
    for (const auto& seg : _ref.segments())
    {
      double vmax = 0.0;
      for (int i = 0; i <= 16; ++i)
        vmax = std::max(vmax, seg.velocity(seg.dt * i / 16.0).norm());
      const int n = std::max(1, static_cast<int>(std::ceil(1.05 * vmax * seg.dt / max_step)));
      const std::size_t begin = _poly.empty() ? 0 : 1;
      for (std::size_t i = begin; i <= static_cast<std::size_t>(n); ++i)
        _poly.push_back(seg.position(seg.dt * static_cast<double>(i) / n));
    }
    _lo = _poly.front();
    _hi = _poly.front();
    for (const auto& q : _poly)
    {
      _lo = _lo.cwiseMin(q);
      _hi = _hi.cwiseMax(q);
    }
  }

  /// A tunnel that admits everything.
  static Tunnel unbounded(Trajectory ref)
  {
    Tunnel t(std::move(ref), 1.0, 1.0);
    t._radius = std::numeric_limits<double>::infinity();
    return t;
  }

  double radius() const { return _radius; }
  const Trajectory& reference() const { return _ref; }
  const std::vector<Vec>& polyline() const { return _poly; }

  /// Euclidean distance from p to the reference polyline.
  double distance(const Vec& p) const
  {
    double best = std::numeric_limits<double>::infinity();
    if (_poly.size() == 1)
      return (p - _poly[0]).norm();
    for (std::size_t i = 0; i + 1 < _poly.size(); ++i)
    {
      const Vec ab = _poly[i + 1] - _poly[i];
      const double len2 = ab.squaredNorm();
      double s = len2 > 0.0 ? (p - _poly[i]).dot(ab) / len2 : 0.0;
      s = std::clamp(s, 0.0, 1.0);
      best = std::min(best, (p - _poly[i] - s * ab).squaredNorm());
    }
    return std::sqrt(best);
  }

  bool contains(const Vec& p) const
  {
    if (std::isinf(_radius))
      return true;
    for (int k = 0; k < p.size(); ++k)
      if (p[k] < _lo[k] - _radius || p[k] > _hi[k] + _radius)
        return false;
    return distance(p) <= _radius;
  }

private:
  Trajectory _ref;
  double _radius;
  std::vector<Vec> _poly;
  Vec _lo, _hi;
};

inline bool in_tunnel(const MotionPrimitive& p, const Tunnel& tun, int samples)
{
  if (std::isinf(tun.radius()))
    return true;
  const double step = p.dt / (samples - 1);
  for (int i = 0; i < samples; ++i)
    if (!tun.contains(p.position(i * step)))
      return false;
  return true;
}

/// Immutable static-workspace snapshot shared by concurrent searches.
struct World
{
  std::shared_ptr<const OccupancyGrid> grid;
  std::shared_ptr<const PotentialField> potential;

  static World make(OccupancyGrid grid)
  {
    World w;
    w.grid = std::make_shared<const OccupancyGrid>(std::move(grid));
    return w;
  }

  static World make(OccupancyGrid grid, double F_max, double d_thr, double k)
  {
    World w;
    auto g = std::make_shared<const OccupancyGrid>(std::move(grid));
    w.potential = std::make_shared<const PotentialField>(
      build_potential(distance_transform(*g), F_max, d_thr, k));
    w.grid = std::move(g);
    return w;
  }
};

} // namespace latplan

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
#include <cmath>
#include <vector>

#include "dynamics.hpp"

namespace latplan {

/// Below this speed the motion direction is undefined and yaw terms skip
/// the sample.
inline constexpr double kMinSpeedForHeading = 1e-3;

/// Horizontal motion direction atan2(v_y, v_x).
inline double heading_of(const Vec& v) { return std::atan2(v[1], v[0]); }

inline double horizontal_speed(const Vec& v) { return std::hypot(v[0], v[1]); }

/// Integral of the squared wrapped yaw error (yaw minus motion direction)
/// over `samples` uniform points, trapezoid weights, skipping samples where
/// the robot is (nearly) at rest.
inline double yaw_cost(const MotionPrimitive& p, int samples)
{
  if (p.dim() < 2)
    return 0.0;
  const double step = p.dt / (samples - 1);
  double acc = 0.0;
  for (int i = 0; i < samples; ++i)
  {
    const double t = i * step;
    const Vec v = p.velocity(t);
    if (horizontal_speed(v) < kMinSpeedForHeading)
      continue;
    const double e = angle_diff(p.yaw(t), heading_of(v));
    const double w = (i == 0 || i == samples - 1) ? 0.5 : 1.0;
    acc += w * e * e;
  }
  return acc * step;
}

namespace detail {

inline void quadratic_roots(double a, double b, double c, double lo, double hi, std::vector<double>& out)
{
  if (std::abs(a) < 1e-15)
  {
    if (std::abs(b) > 1e-15)
    {
      const double r = -c / b;
      if (r > lo && r < hi)
        out.push_back(r);
    }
    return;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0)
    return;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  const double r1 = q / a;
  const double r2 = q != 0.0 ? c / q : r1;
  for (double r : {r1, r2})
    if (r > lo && r < hi)
      out.push_back(r);
}

// Dense fallback for orders where the motion direction is not a simple
// function of time.
inline bool fov_feasible_sampled(const MotionPrimitive& p, double half_fov, int samples)
{
  for (int i = 0; i < samples; ++i)
  {
    const double t = p.dt * i / (samples - 1);
    const Vec v = p.velocity(t);
    if (horizontal_speed(v) < kMinSpeedForHeading)
      continue;
    if (std::abs(angle_diff(p.yaw(t), heading_of(v))) > half_fov + 1e-9)
      return false;
  }
  return true;
}

} // namespace detail

/// Hard field-of-view constraint |yaw - motion direction| <= theta / 2 at
/// every instant where the robot moves faster than kMinSpeedForHeading.
///
/// For acceleration-controlled primitives the check is exact: velocity is
/// affine in t, so the heading turns monotonically and the yaw error can
/// only peak where its rate vanishes, which is a quadratic condition.
/// Other orders fall back to dense sampling.
inline bool fov_feasible(const MotionPrimitive& p, double theta)
{
  if (theta >= 2.0 * kPi || p.dim() < 2)
    return true;
  const double half = 0.5 * theta;
  if (p.order != 2)
    return detail::fov_feasible_sampled(p, half, std::max(64, static_cast<int>(p.dt / 1e-3) + 1));

  const double vx = p.start.x[1][0], vy = p.start.x[1][1];
  const double ux = p.control.u[0], uy = p.control.u[1];
  const double w = p.control.u_psi;
  // |v(t)|^2 = A t^2 + B t + C
  const double A = ux * ux + uy * uy;
  const double B = 2.0 * (vx * ux + vy * uy);
  const double C = vx * vx + vy * vy;
  const double cross = vx * uy - vy * ux;  // heading rate = cross / |v|^2

  std::vector<double> cand{0.0, p.dt};
  const double eps2 = kMinSpeedForHeading * kMinSpeedForHeading;
  detail::quadratic_roots(A, B, C - eps2, 0.0, p.dt, cand);
  if (w != 0.0)
    detail::quadratic_roots(A * w, B * w, C * w - cross, 0.0, p.dt, cand);
  std::sort(cand.begin(), cand.end());

  auto vel = [&](double t) {
    Vec v(2);
    v << vx + ux * t, vy + uy * t;
    return v;
  };

  for (std::size_t i = 0; i + 1 < cand.size(); ++i)
  {
    const double a = cand[i], b = cand[i + 1];
    if (!(b > a))
      continue;
    if (vel(0.5 * (a + b)).norm() < kMinSpeedForHeading)
      continue;
    const Vec va = vel(a), vb = vel(b);
    const double ea = angle_diff(p.yaw(a), heading_of(va));
    // Heading sweeps less than pi on a stretch that avoids the origin.
    const double swept = std::atan2(va[0] * vb[1] - va[1] * vb[0], va.dot(vb));
    const double eb = ea + w * (b - a) - swept;
    if (std::abs(ea) > half + 1e-9 || std::abs(eb) > half + 1e-9)
      return false;
  }
  return true;
}

} // namespace latplan

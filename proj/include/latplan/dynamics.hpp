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
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poly.hpp"

namespace latplan {

/// Spatial vector with inline storage for up to three axes.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

/// Highest supported system order (position plus three derivatives).
inline constexpr int kMaxOrder = 4;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0)
    a += 2.0 * kPi;
  return a - kPi;
}

/// Shortest signed difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline double factorial(int n)
{
  double f = 1.0;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

/// Chain-of-integrators model and its discretization.
struct SystemSpec
{
  int dim = 2;          ///< spatial dimension m
  int order = 2;        ///< q: the control is the q-th derivative of position
  double u_max = 1.0;   ///< per-axis control bound (m/s^q)
  int du = 3;           ///< control samples per axis, odd
  double dt = 1.0;      ///< primitive duration (s)
  double v_max = 1.0;
  double a_max = 1.0;
  double j_max = 1.0;
  bool yaw_enabled = false;
  double u_psi_max = 0.0; ///< yaw-rate bound (rad/s)
  int du_psi = 1;

  /// Bound on the k-th derivative of position, 1 <= k < order.
  double bound(int k) const
  {
    switch (k)
    {
      case 1: return v_max;
      case 2: return a_max;
      case 3: return j_max;
      default: throw std::out_of_range("no derivative bound for order " + std::to_string(k));
    }
  }

  double u_step() const { return du > 1 ? 2.0 * u_max / (du - 1) : 0.0; }
  double u_psi_step() const { return du_psi > 1 ? 2.0 * u_psi_max / (du_psi - 1) : 0.0; }

  void validate() const
  {
    if (dim < 1 || dim > 3)
      throw std::invalid_argument("SystemSpec: dim must be 1, 2 or 3");
    if (order < 1 || order > kMaxOrder)
      throw std::invalid_argument("SystemSpec: order must be in [1, 4]");
    if (!(u_max > 0.0) || !(dt > 0.0))
      throw std::invalid_argument("SystemSpec: u_max and dt must be positive");
    if (du < 3 || du % 2 == 0)
      throw std::invalid_argument("SystemSpec: du must be odd and >= 3");
    for (int k = 1; k < order; ++k)
      if (!(bound(k) > 0.0))
        throw std::invalid_argument("SystemSpec: derivative bounds must be positive");
    if (yaw_enabled && (du_psi < 1 || du_psi % 2 == 0 || u_psi_max < 0.0))
      throw std::invalid_argument("SystemSpec: du_psi must be odd and u_psi_max >= 0");
  }
};

/// Flat-output state: position, derivatives up to order q-1, yaw and time.
struct State
{
  /// x[0] is position, x[k] the k-th derivative.
  std::array<Vec, kMaxOrder> x;
  double yaw = 0.0;
  double t = 0.0;

  State() = default;

  State(int dim, int order)
  {
    for (int k = 0; k < order; ++k)
      x[k] = Vec::Zero(dim);
  }

  static State at_rest(const SystemSpec& spec, const Vec& pos, double yaw = 0.0, double t = 0.0)
  {
    State s(spec.dim, spec.order);
    s.x[0] = pos;
    s.yaw = wrap_angle(yaw);
    s.t = t;
    return s;
  }

  int dim() const { return static_cast<int>(x[0].size()); }

  const Vec& pos() const { return x[0]; }
  Vec& pos() { return x[0]; }
  const Vec& vel() const { return x[1]; }
  Vec& vel() { return x[1]; }
};

/// Control for one primitive: constant q-th derivative plus yaw rate.
struct Control
{
  Vec u;
  double u_psi = 0.0;
};

/// One constant-control segment of duration dt.
struct MotionPrimitive
{
  State start;
  Control control;
  double dt = 0.0;
  std::vector<Polynomial> axis;  ///< position polynomials in local time [0, dt]
  State end;
  int order = 2;

  int dim() const { return static_cast<int>(axis.size()); }

  Vec position(double t) const
  {
    Vec p(dim());
    for (int k = 0; k < dim(); ++k)
      p[k] = axis[k](t);
    return p;
  }

  /// k-th derivative of position at local time t.
  Vec derivative(double t, int k) const
  {
    Vec p(dim());
    for (int a = 0; a < dim(); ++a)
      p[a] = axis[a].derivative_at(t, static_cast<std::size_t>(k));
    return p;
  }

  Vec velocity(double t) const { return derivative(t, 1); }

  /// Unwrapped yaw along the primitive; wrap_angle() for display.
  double yaw(double t) const { return start.yaw + control.u_psi * t; }
};

/// Discrete control set: du evenly spaced values per axis, times du_psi
/// yaw rates when yaw is enabled.
inline std::vector<Control> generate_control_set(const SystemSpec& spec)
{
  std::vector<double> levels(spec.du);
  for (int i = 0; i < spec.du; ++i)
    levels[i] = -spec.u_max + i * spec.u_step();
  levels[spec.du / 2] = 0.0;

  std::vector<double> yaw_levels{0.0};
  if (spec.yaw_enabled && spec.du_psi > 1)
  {
    yaw_levels.resize(spec.du_psi);
    for (int i = 0; i < spec.du_psi; ++i)
      yaw_levels[i] = -spec.u_psi_max + i * spec.u_psi_step();
    yaw_levels[spec.du_psi / 2] = 0.0;
  }

  std::size_t count = 1;
  for (int k = 0; k < spec.dim; ++k)
    count *= static_cast<std::size_t>(spec.du);

  std::vector<Control> out;
  out.reserve(count * yaw_levels.size());
  for (std::size_t idx = 0; idx < count; ++idx)
  {
    Vec u(spec.dim);
    std::size_t rem = idx;
    for (int k = 0; k < spec.dim; ++k)
    {
      u[k] = levels[rem % spec.du];
      rem /= spec.du;
    }
    for (double w : yaw_levels)
      out.push_back(Control{u, w});
  }
  return out;
}

/// Closed-form integration of the chain of integrators under constant
/// control.
inline MotionPrimitive propagate(const State& s, const Control& c, double dt, int order)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("propagate: dt must be positive");
  const int m = s.dim();

  MotionPrimitive p;
  p.start = s;
  p.control = c;
  p.dt = dt;
  p.order = order;
  p.axis.reserve(m);
  for (int a = 0; a < m; ++a)
  {
    Polynomial::Coeffs coeffs(order + 1, 0.0);
    for (int i = 0; i < order; ++i)
      coeffs[i] = s.x[i][a] / factorial(i);
    coeffs[order] = c.u[a] / factorial(order);
    p.axis.emplace_back(std::move(coeffs));
  }

  p.end = State(m, order);
  for (int k = 0; k < order; ++k)
    p.end.x[k] = p.derivative(dt, k);
  p.end.yaw = wrap_angle(s.yaw + c.u_psi * dt);
  p.end.t = s.t + dt;
  return p;
}

inline MotionPrimitive propagate(const State& s, const Control& c, const SystemSpec& spec)
{
  return propagate(s, c, spec.dt, spec.order);
}

/// Effort plus time cost: |u|^2 dt + rho_T dt.
inline double primitive_cost(const MotionPrimitive& p, double rho_T)
{
  return p.control.u.squaredNorm() * p.dt + rho_T * p.dt;
}

/// True iff every derivative of order 1..q-1 stays inside its bound over
/// [0, dt] and the yaw rate is within its bound.
inline bool check_dynamic_feasibility(const MotionPrimitive& p, const SystemSpec& spec)
{
  constexpr double slack = 1e-9;
  if (spec.yaw_enabled && std::abs(p.control.u_psi) > spec.u_psi_max + slack)
    return false;

  for (int a = 0; a < p.dim(); ++a)
  {
    Polynomial d = p.axis[a];
    for (int k = 1; k < p.order; ++k)
    {
      d = d.derivative();
      const double bound = spec.bound(k);
      if (std::abs(d(0.0)) > bound + slack || std::abs(d(p.dt)) > bound + slack)
        return false;
      const RootSet extrema = real_roots_in_interval(d.derivative(), 0.0, p.dt, 1e-12);
      for (double t : extrema.roots)
        if (std::abs(d(t)) > bound + slack)
          return false;
    }
  }
  return true;
}

/// Sample of a trajectory at one instant.
struct TrajectoryPoint
{
  std::array<Vec, kMaxOrder> x;
  double yaw = 0.0;
  std::size_t segment = 0;

  const Vec& pos() const { return x[0]; }
  const Vec& vel() const { return x[1]; }
};

/// Chain of primitives; segment n starts where segment n-1 ends.
class Trajectory
{
public:
  Trajectory() = default;

  explicit Trajectory(std::vector<MotionPrimitive> segments)
  : _segments(std::move(segments))
  {
    rebuild();
  }

  void push_back(MotionPrimitive p)
  {
    _segments.push_back(std::move(p));
    rebuild();
  }

  const std::vector<MotionPrimitive>& segments() const { return _segments; }
  bool empty() const { return _segments.empty(); }
  std::size_t size() const { return _segments.size(); }

  /// Total duration.
  double duration() const { return _knots.empty() ? 0.0 : _knots.back(); }

  /// Absolute time stamp of the first segment's start state.
  double start_time() const { return _segments.empty() ? 0.0 : _segments.front().start.t; }

  /// Cumulative local knot times, knots()[0] == 0.
  const std::vector<double>& knots() const { return _knots; }

  /// Largest position/derivative mismatch between consecutive segments.
  double continuity_error() const
  {
    double err = 0.0;
    for (std::size_t i = 1; i < _segments.size(); ++i)
    {
      const auto& a = _segments[i - 1].end;
      const auto& b = _segments[i].start;
      for (int k = 0; k < _segments[i].order; ++k)
        err = std::max(err, (a.x[k] - b.x[k]).cwiseAbs().maxCoeff());
      err = std::max(err, std::abs(a.t - b.t));
    }
    return err;
  }

private:
  void rebuild()
  {
    _knots.assign(1, 0.0);
    for (const auto& s : _segments)
      _knots.push_back(_knots.back() + s.dt);
  }

  std::vector<MotionPrimitive> _segments;
  std::vector<double> _knots;
};

/// Evaluates a trajectory at local time t in [0, T]. At a knot the later
/// segment is used.
inline TrajectoryPoint evaluate_trajectory(const Trajectory& traj, double t)
{
  if (traj.empty())
    throw std::out_of_range("evaluate_trajectory: empty trajectory");
  const double T = traj.duration();
  if (!(t >= 0.0 && t <= T))
    throw std::out_of_range("evaluate_trajectory: t outside [0, T]");

  const auto& knots = traj.knots();
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  std::size_t seg = static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
  seg = std::min(seg, traj.size() - 1);

  const MotionPrimitive& p = traj.segments()[seg];
  const double local = t - knots[seg];
  TrajectoryPoint out;
  out.segment = seg;
  for (int k = 0; k < p.order; ++k)
    out.x[k] = p.derivative(local, k);
  out.yaw = wrap_angle(p.yaw(local));
  return out;
}

} // namespace latplan

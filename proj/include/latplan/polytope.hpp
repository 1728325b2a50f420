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
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dynamics.hpp"

namespace latplan {

/// Half-space a^T p <= b.
struct Face
{
  Vec a;
  double b = 0.0;
};

/// Bounded convex polytope kept in both half-space and vertex form.
struct ConvexPolytope
{
  std::vector<Face> faces;
  std::vector<Vec> vertices;

  int dim() const { return faces.empty() ? 0 : static_cast<int>(faces.front().a.size()); }

  /// Largest face violation a^T p - b (<= 0 inside).
  double max_violation(const Vec& p) const
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& f : faces)
      worst = std::max(worst, f.a.dot(p) - f.b);
    return worst;
  }

  bool contains(const Vec& p, double tol = 1e-9) const { return max_violation(p) <= tol; }

  /// Support function h(a) = max over vertices of a^T v.
  double support(const Vec& a) const
  {
    double h = -std::numeric_limits<double>::infinity();
    for (const auto& v : vertices)
      h = std::max(h, a.dot(v));
    return h;
  }

  /// Centrally symmetric about the origin (reference point).
  bool symmetric(double tol = 1e-9) const
  {
    for (const auto& v : vertices)
    {
      const bool mirrored = std::any_of(
        vertices.begin(), vertices.end(),
        [&](const Vec& w) { return (v + w).cwiseAbs().maxCoeff() <= tol * (1.0 + v.norm()); });
      if (!mirrored)
        return false;
    }
    return true;
  }

  static ConvexPolytope from_faces(std::vector<Face> faces);

  /// Axis-aligned box [center - half, center + half].
  static ConvexPolytope box(const Vec& center, const Vec& half)
  {
    const int m = static_cast<int>(center.size());
    std::vector<Face> faces;
    for (int k = 0; k < m; ++k)
    {
      Vec a = Vec::Zero(m);
      a[k] = 1.0;
      faces.push_back({a, center[k] + half[k]});
      a[k] = -1.0;
      faces.push_back({a, -(center[k] - half[k])});
    }
    ConvexPolytope poly;
    poly.faces = std::move(faces);
    const int corners = 1 << m;
    for (int c = 0; c < corners; ++c)
    {
      Vec v(m);
      for (int k = 0; k < m; ++k)
        v[k] = center[k] + ((c >> k) & 1 ? half[k] : -half[k]);
      poly.vertices.push_back(v);
    }
    return poly;
  }

  /// The reference point itself, as a degenerate polytope.
  static ConvexPolytope point(int dim)
  {
    ConvexPolytope poly;
    poly.vertices.push_back(Vec::Zero(dim));
    return poly;
  }

  ConvexPolytope translated(const Vec& offset) const
  {
    ConvexPolytope out = *this;
    for (auto& f : out.faces)
      f.b += f.a.dot(offset);
    for (auto& v : out.vertices)
      v += offset;
    return out;
  }
};

namespace detail {

inline void combinations(int n, int k, int start, std::vector<int>& cur, const auto& fn)
{
  if (static_cast<int>(cur.size()) == k)
  {
    fn(cur);
    return;
  }
  for (int i = start; i < n; ++i)
  {
    cur.push_back(i);
    combinations(n, k, i + 1, cur, fn);
    cur.pop_back();
  }
}

} // namespace detail

/// Vertex enumeration by intersecting every m-subset of face planes.
inline std::vector<Vec> polytope_vertices(const std::vector<Face>& faces, double tol = 1e-9)
{
  std::vector<Vec> out;
  if (faces.empty())
    return out;
  const int m = static_cast<int>(faces.front().a.size());
  std::vector<int> cur;
  detail::combinations(static_cast<int>(faces.size()), m, 0, cur, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd b(m);
    for (int r = 0; r < m; ++r)
    {
      A.row(r) = faces[idx[r]].a.transpose();
      b[r] = faces[idx[r]].b;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < m)
      return;
    const Eigen::VectorXd x = lu.solve(b);
    Vec v = x;
    for (const auto& f : faces)
      if (f.a.dot(v) - f.b > tol * (1.0 + std::abs(f.b)))
        return;
    for (const auto& w : out)
      if ((w - v).cwiseAbs().maxCoeff() <= 1e-9)
        return;
    out.push_back(v);
  });
  return out;
}

inline ConvexPolytope ConvexPolytope::from_faces(std::vector<Face> faces)
{
  ConvexPolytope poly;
  poly.faces = std::move(faces);
  poly.vertices = polytope_vertices(poly.faces);
  if (poly.vertices.empty())
    throw std::invalid_argument("ConvexPolytope: empty or unbounded face set");

  // Bounded exactly when the recession cone {d : a.d <= 0} is trivial; its
  // intersection with the unit box has only the origin as a vertex then.
  const int m = static_cast<int>(poly.faces.front().a.size());
  std::vector<Face> cone;
  for (const auto& f : poly.faces)
    cone.push_back({f.a / f.a.norm(), 0.0});
  for (int k = 0; k < m; ++k)
  {
    Vec e = Vec::Zero(m);
    e[k] = 1.0;
    cone.push_back({e, 1.0});
    cone.push_back({-e, 1.0});
  }
  for (const auto& d : polytope_vertices(cone))
    if (d.norm() > 1e-7)
      throw std::invalid_argument("ConvexPolytope: unbounded face set");
  return poly;
}

namespace detail {

inline std::vector<Vec> pair_differences(const std::vector<Vec>& pts)
{
  std::vector<Vec> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
    {
      const Vec d = pts[j] - pts[i];
      if (d.norm() > 1e-12)
        out.push_back(d);
    }
  return out;
}

// Rank of the affine hull of the given points (0 for a single point).
inline int affine_rank(const std::vector<Vec>& pts)
{
  if (pts.size() < 2)
    return 0;
  Eigen::MatrixXd M(pts.front().size(), pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i)
    M.col(i - 1) = pts[i] - pts[0];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.rank());
}

} // namespace detail

/// Exact Minkowski sum obstacle + robot for a robot shape symmetric about
/// its reference point.
///
/// Every obstacle face keeps its normal with b_j grown by the robot's
/// support h(a_j). Facet normals of the robot (and, in 3-D, edge-by-edge
/// cross products) are added where they bound the sum, so the result is
/// the sum itself rather than an outer approximation.
inline ConvexPolytope minkowski_inflate(const ConvexPolytope& obstacle, const ConvexPolytope& robot)
{
  if (robot.vertices.empty() || !robot.symmetric())
    throw std::invalid_argument("minkowski_inflate: robot shape must be symmetric about its reference point");
  const int m = obstacle.dim();

  std::vector<Vec> sum_pts;
  for (const auto& a : obstacle.vertices)
    for (const auto& b : robot.vertices)
      sum_pts.push_back(a + b);

  std::vector<Face> faces;
  for (const auto& f : obstacle.faces)
    faces.push_back({f.a, f.b + robot.support(f.a)});

  // Candidate facet normals beyond the obstacle's own.
  std::vector<Vec> candidates;
  const auto rob_edges = detail::pair_differences(robot.vertices);
  if (m == 2)
  {
    for (const auto& e : rob_edges)
    {
      Vec n(2);
      n << e[1], -e[0];
      candidates.push_back(n);
      candidates.push_back(-n);
    }
  }
  else if (m == 3)
  {
    const auto obs_edges = detail::pair_differences(obstacle.vertices);
    for (const auto& e : rob_edges)
    {
      for (const auto& g : rob_edges)
      {
        const Vec n = e.head<3>().cross(g.head<3>());
        candidates.push_back(n);
        candidates.push_back(-n);
      }
      for (const auto& g : obs_edges)
      {
        const Vec n = e.head<3>().cross(g.head<3>());
        candidates.push_back(n);
        candidates.push_back(-n);
      }
    }
  }

  for (Vec n : candidates)
  {
    const double len = n.norm();
    if (len < 1e-9)
      continue;
    n /= len;
    const bool duplicate = std::any_of(faces.begin(), faces.end(), [&](const Face& f) {
      return (f.a / f.a.norm() - n).cwiseAbs().maxCoeff() < 1e-9;
    });
    if (duplicate)
      continue;
    double h = -std::numeric_limits<double>::infinity();
    for (const auto& p : sum_pts)
      h = std::max(h, n.dot(p));
    std::vector<Vec> tight;
    for (const auto& p : sum_pts)
      if (n.dot(p) >= h - 1e-9 * (1.0 + std::abs(h)))
        tight.push_back(p);
    // A facet of the sum touches an (m-1)-dimensional set of points.
    if (detail::affine_rank(tight) >= m - 1)
      faces.push_back({n, h});
  }
  return ConvexPolytope::from_faces(std::move(faces));
}

} // namespace latplan

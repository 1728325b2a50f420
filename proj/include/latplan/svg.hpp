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
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dynamics.hpp"
#include "grid.hpp"
#include "polytope.hpp"

namespace latplan::io {

/// Static top-down figure in world coordinates (first two axes). The y axis
/// points up; the plot is `width` pixels wide.
class SvgFigure
{
public:
  explicit SvgFigure(const GridGeometry& g, double width = 800.0)
  {
    _x0 = g.origin[0];
    _y0 = g.dim() > 1 ? g.origin[1] : 0.0;
    _w = g.dims[0] * g.resolution;
    _h = g.dim() > 1 ? g.dims[1] * g.resolution : g.resolution;
    _scale = width / _w;
  }

  /// Occupied cells in dark gray, unknown cells in light gray.
  void add_grid(const OccupancyGrid& grid)
  {
    const auto& g = grid.geometry;
    for (std::size_t lin = 0; lin < grid.cells.size(); ++lin)
    {
      const Cell c = grid.cells[lin];
      if (c == Cell::Free)
        continue;
      cell_rect(g, lin, c == Cell::Occupied ? "#333333" : "#bbbbbb", 1.0);
    }
  }

  /// Potential heat map: red cells with opacity U / F_max.
  void add_potential(const PotentialField& pf)
  {
    for (std::size_t lin = 0; lin < pf.U.size(); ++lin)
      if (pf.U[lin] > 0.0)
        cell_rect(pf.geometry, lin, "#e03020", 0.6 * pf.U[lin] / pf.F_max);
  }

  void add_trajectory(const Trajectory& traj, const std::string& color, double width = 2.0, double step = 0.05)
  {
    if (traj.empty())
      return;
    const double T = traj.duration();
    const int n = std::max(2, static_cast<int>(std::ceil(T / step)) + 1);
    std::string pts;
    for (int i = 0; i < n; ++i)
    {
      const Vec p = evaluate_trajectory(traj, std::min(T, i * step)).pos();
      pts += fmt::format("{:.3f},{:.3f} ", px(p), py(p));
    }
    _body += fmt::format(R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"/>)", pts, color, width);
    _body += '\n';
  }

  /// Small triangle pointing along the yaw at every segment start.
  void add_yaw_marks(const Trajectory& traj, const std::string& color, double size = 0.35)
  {
    for (const auto& seg : traj.segments())
    {
      const Vec& p = seg.start.pos();
      const double c = std::cos(seg.start.yaw), s = std::sin(seg.start.yaw);
      const double tip[2] = {p[0] + size * c, y_of(p) + size * s};
      const double l[2] = {p[0] - 0.5 * size * c - 0.4 * size * s, y_of(p) - 0.5 * size * s + 0.4 * size * c};
      const double r[2] = {p[0] - 0.5 * size * c + 0.4 * size * s, y_of(p) - 0.5 * size * s - 0.4 * size * c};
      _body += fmt::format(R"(<polygon points="{:.3f},{:.3f} {:.3f},{:.3f} {:.3f},{:.3f}" fill="{}"/>)",
                           sx(tip[0]), sy(tip[1]), sx(l[0]), sy(l[1]), sx(r[0]), sy(r[1]), color);
      _body += '\n';
    }
  }

  void add_polytope(const ConvexPolytope& poly, const std::string& color, double opacity)
  {
    if (poly.vertices.size() < 3 || poly.dim() < 2)
      return;
    Vec c = Vec::Zero(poly.dim());
    for (const auto& v : poly.vertices)
      c += v;
    c /= static_cast<double>(poly.vertices.size());
    std::vector<Vec> ring = poly.vertices;
    std::sort(ring.begin(), ring.end(), [&](const Vec& a, const Vec& b) {
      return std::atan2(a[1] - c[1], a[0] - c[0]) < std::atan2(b[1] - c[1], b[0] - c[0]);
    });
    std::string pts;
    for (const auto& v : ring)
      pts += fmt::format("{:.3f},{:.3f} ", px(v), py(v));
    _body += fmt::format(R"(<polygon points="{}" fill="{}" fill-opacity="{:.3f}" stroke="{}"/>)", pts, color,
                         opacity, color);
    _body += '\n';
  }

  void add_marker(const Vec& p, const std::string& color, double radius = 0.2)
  {
    _body += fmt::format(R"(<circle cx="{:.3f}" cy="{:.3f}" r="{:.3f}" fill="{}"/>)", px(p), py(p),
                         radius * _scale, color);
    _body += '\n';
  }

  void add_label(const std::string& text)
  {
    _body += fmt::format(R"(<text x="4" y="14" font-family="monospace" font-size="12">{}</text>)", text);
    _body += '\n';
  }

  std::string str(const std::string& version) const
  {
    return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<!-- latplan {} -->\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.3f} {:.3f}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"black\"/>\n{}</svg>\n",
      version, _w * _scale, _h * _scale, _w * _scale, _h * _scale, _body);
  }

private:
  static double y_of(const Vec& p) { return p.size() > 1 ? p[1] : 0.0; }
  double sx(double x) const { return (x - _x0) * _scale; }
  double sy(double y) const { return (_h - (y - _y0)) * _scale; }
  double px(const Vec& p) const { return sx(p[0]); }
  double py(const Vec& p) const { return sy(y_of(p)); }

  void cell_rect(const GridGeometry& g, std::size_t lin, const char* color, double opacity)
  {
    const auto idx = g.unlinear(lin);
    const double x = g.origin[0] + idx[0] * g.resolution;
    const double y = g.dim() > 1 ? g.origin[1] + (idx[1] + 1) * g.resolution : g.resolution;
    _body += fmt::format(R"(<rect x="{:.3f}" y="{:.3f}" width="{:.3f}" height="{:.3f}" fill="{}" fill-opacity="{:.3f}" shape-rendering="crispEdges"/>)",
                         sx(x), sy(y), g.resolution * _scale, g.resolution * _scale, color, opacity);
    _body += '\n';
  }

  double _scale, _x0, _y0, _w, _h;
  std::string _body;
};

} // namespace latplan::io

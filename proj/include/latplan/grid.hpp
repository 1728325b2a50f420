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
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"

namespace latplan {

enum class Cell : std::uint8_t
{
  Free = 0,
  Occupied = 1,
  Unknown = 2,
};

/// Shared geometry of every per-cell field: origin is the lower corner of
/// cell 0, cells are square with side `resolution`, stored row-major with
/// axis 0 varying fastest.
struct GridGeometry
{
  Vec origin;
  double resolution = 1.0;
  std::vector<int> dims;

  int dim() const { return static_cast<int>(dims.size()); }

  std::size_t cell_count() const
  {
    std::size_t n = 1;
    for (int d : dims)
      n *= static_cast<std::size_t>(d);
    return n;
  }

  /// Index of the cell containing `p` (may be out of bounds).
  std::array<int, 3> cell_of(const Vec& p) const
  {
    std::array<int, 3> idx{0, 0, 0};
    for (int k = 0; k < dim(); ++k)
      idx[k] = static_cast<int>(std::floor((p[k] - origin[k]) / resolution));
    return idx;
  }

  bool in_bounds(const std::array<int, 3>& idx) const
  {
    for (int k = 0; k < dim(); ++k)
      if (idx[k] < 0 || idx[k] >= dims[k])
        return false;
    return true;
  }

  std::size_t linear(const std::array<int, 3>& idx) const
  {
    std::size_t lin = 0;
    for (int k = dim() - 1; k >= 0; --k)
      lin = lin * static_cast<std::size_t>(dims[k]) + static_cast<std::size_t>(idx[k]);
    return lin;
  }

  std::array<int, 3> unlinear(std::size_t lin) const
  {
    std::array<int, 3> idx{0, 0, 0};
    for (int k = 0; k < dim(); ++k)
    {
      idx[k] = static_cast<int>(lin % static_cast<std::size_t>(dims[k]));
      lin /= static_cast<std::size_t>(dims[k]);
    }
    return idx;
  }

  Vec center(const std::array<int, 3>& idx) const
  {
    Vec c(dim());
    for (int k = 0; k < dim(); ++k)
      c[k] = origin[k] + (idx[k] + 0.5) * resolution;
    return c;
  }

  /// Linear index of the cell containing `p`, or nullopt when outside.
  std::optional<std::size_t> lookup(const Vec& p) const
  {
    const auto idx = cell_of(p);
    if (!in_bounds(idx))
      return std::nullopt;
    return linear(idx);
  }

  void validate() const
  {
    if (!(resolution > 0.0))
      throw std::invalid_argument("grid resolution must be positive");
    if (dims.empty() || dims.size() > 3 || static_cast<int>(origin.size()) != dim())
      throw std::invalid_argument("grid dims/origin mismatch");
    for (int d : dims)
      if (d < 1)
        throw std::invalid_argument("grid dims must be >= 1");
  }
};

struct OccupancyGrid
{
  GridGeometry geometry;
  std::vector<Cell> cells;
  /// Out-of-bounds positions count as occupied when set.
  bool bounded_workspace = true;

  OccupancyGrid() = default;

  OccupancyGrid(GridGeometry g, Cell fill = Cell::Free)
  : geometry(std::move(g))
  {
    geometry.validate();
    cells.assign(geometry.cell_count(), fill);
  }

  Cell at(std::size_t lin) const { return cells[lin]; }
  Cell& at(std::size_t lin) { return cells[lin]; }

  Cell at(const std::array<int, 3>& idx) const { return cells[geometry.linear(idx)]; }
  Cell& at(const std::array<int, 3>& idx) { return cells[geometry.linear(idx)]; }

  /// Collision query. Unknown cells are treated as free.
  bool occupied(const Vec& p) const
  {
    const auto idx = geometry.cell_of(p);
    if (!geometry.in_bounds(idx))
      return bounded_workspace;
    return at(idx) == Cell::Occupied;
  }

  void fill_box(const Vec& lo, const Vec& hi, Cell value = Cell::Occupied)
  {
    for (std::size_t lin = 0; lin < cells.size(); ++lin)
    {
      const Vec c = geometry.center(geometry.unlinear(lin));
      bool inside = true;
      for (int k = 0; k < geometry.dim(); ++k)
        inside = inside && c[k] >= lo[k] && c[k] <= hi[k];
      if (inside)
        cells[lin] = value;
    }
  }
};

/// Distance (meters) from each cell center to the nearest occupied cell
/// center; +infinity when the grid has no occupied cell.
struct DistanceField
{
  GridGeometry geometry;
  std::vector<double> d;

  double at(const Vec& p) const
  {
    const auto lin = geometry.lookup(p);
    return lin ? d[*lin] : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

// 1-D squared distance transform of a sampled function (lower envelope of
// parabolas). f may contain +inf.
inline void edt_1d(const double* f, double* out, int n, std::vector<int>& v, std::vector<double>& z)
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q)
  {
    if (f[q] == inf)
      continue;
    if (k < 0)
    {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    // z[0] is -inf, so the envelope never empties
    double s;
    while (true)
    {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0)
  {
    for (int q = 0; q < n; ++q)
      out[q] = inf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q)
  {
    while (z[j + 1] < q)
      ++j;
    const double dq = double(q) - v[j];
    out[q] = dq * dq + f[v[j]];
  }
}

} // namespace detail

/// Exact Euclidean distance transform on cell centers (separable lower
/// envelope method). Unknown cells count as free.
inline DistanceField distance_transform(const OccupancyGrid& grid)
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  const GridGeometry& g = grid.geometry;
  const std::size_t n = g.cell_count();

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i)
    sq[i] = grid.cells[i] == Cell::Occupied ? 0.0 : inf;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> line_in, line_out;

  std::size_t stride = 1;
  for (int axis = 0; axis < g.dim(); ++axis)
  {
    const int len = g.dims[axis];
    line_in.resize(len);
    line_out.resize(len);
    const std::size_t block = stride * static_cast<std::size_t>(len);
    for (std::size_t base = 0; base < n; base += block)
    {
      for (std::size_t off = 0; off < stride; ++off)
      {
        const std::size_t start = base + off;
        for (int i = 0; i < len; ++i)
          line_in[i] = sq[start + static_cast<std::size_t>(i) * stride];
        detail::edt_1d(line_in.data(), line_out.data(), len, v, z);
        for (int i = 0; i < len; ++i)
          sq[start + static_cast<std::size_t>(i) * stride] = line_out[i];
      }
    }
    stride = block;
  }

  DistanceField df;
  df.geometry = g;
  df.d.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    df.d[i] = sq[i] == inf ? inf : std::sqrt(sq[i]) * g.resolution;
  return df;
}

/// Truncated artificial potential: F_max (1 - d/d_thr)^k below the cutoff.
struct PotentialField
{
  GridGeometry geometry;
  double F_max = 1.0;
  double d_thr = 1.0;
  double k = 1.0;
  std::vector<double> U;

  double value(double d) const
  {
    if (!(d < d_thr))
      return 0.0;
    return F_max * std::pow(1.0 - d / d_thr, k);
  }

  /// Nearest-cell lookup; zero outside the grid.
  double at(const Vec& p) const
  {
    const auto lin = geometry.lookup(p);
    return lin ? U[*lin] : 0.0;
  }
};

inline PotentialField build_potential(const DistanceField& df, double F_max, double d_thr, double k)
{
  if (!(F_max > 0.0) || !(d_thr > 0.0) || !(k > 0.0))
    throw std::invalid_argument("build_potential: F_max, d_thr and k must be positive");
  PotentialField pf;
  pf.geometry = df.geometry;
  pf.F_max = F_max;
  pf.d_thr = d_thr;
  pf.k = k;
  pf.U.resize(df.d.size());
  for (std::size_t i = 0; i < df.d.size(); ++i)
    pf.U[i] = pf.value(df.d[i]);
  return pf;
}

} // namespace latplan

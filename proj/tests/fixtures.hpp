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

// Randomized planning instances shared by the search, LPA* and acceptance
// tests. The worlds are built so that every lattice position produced from
// the start lands on a cell center, which keeps duplicate detection exact.

#pragma once

#include <queue>
#include <random>
#include <unordered_map>

#include "latplan/lpastar.hpp"
#include "latplan/multirobot.hpp"
#include "oracles.hpp"

namespace fixtures {

using Rng = std::mt19937_64;

using latplan::Vec;

/// Acceleration-controlled 2D system: u in {-1, 0, 1}^2, dt = 1.
inline latplan::SystemSpec lattice_spec()
{
  latplan::SystemSpec s;
  s.dim = 2;
  s.order = 2;
  s.u_max = 1.0;
  s.du = 3;
  s.dt = 1.0;
  s.v_max = 2.0;
  s.a_max = 1.0;
  return s;
}

/// Cell size matching the position increment of one control step.
inline double lattice_resolution(const latplan::SystemSpec& s) { return 0.5 * s.u_step() * s.dt * s.dt; }

struct Instance
{
  latplan::SystemSpec spec;
  latplan::OccupancyGrid grid;
  latplan::State start;
  latplan::GoalRegion goal;
  int walk_steps = 0;

  latplan::PlanRequest request() const
  {
    latplan::PlanRequest r;
    r.start = start;
    r.goal = goal;
    r.weights.rho_T = 1.0;
    return r;
  }

  latplan::World world() const { return latplan::World::make(grid); }

  latplan::PlanningProblem problem() const { return latplan::PlanningProblem(spec, world(), request()); }

  oracle::EnumProblem enumeration(int depth) const
  {
    oracle::EnumProblem e;
    e.spec = spec;
    e.grid = &grid;
    e.start_pos = start.x[0];
    e.start_vel = start.x[1];
    e.goal_center = goal.center;
    e.goal_pos_tol = goal.pos_tol;
    e.goal_vel_tol = goal.deriv_tol.empty() ? oracle::inf : goal.deriv_tol[0];
    e.rho_T = 1.0;
    e.depth = depth;
    return e;
  }
};

inline latplan::GridGeometry square_geometry(int n, double res)
{
  latplan::GridGeometry g;
  g.origin = Vec::Zero(2);
  g.resolution = res;
  g.dims = {n, n};
  return g;
}

inline Vec cell_center(const latplan::GridGeometry& g, int ix, int iy) { return g.center({ix, iy, 0}); }

/// n x n world with random occupied cells; the goal is the end of a random
/// admissible walk of `min_steps..max_steps` primitives from a resting start,
/// so a path of that depth is known to exist.
inline Instance random_instance(std::mt19937_64& rng, int n, double density, int min_steps, int max_steps)
{
  Instance in;
  in.spec = lattice_spec();
  const double res = lattice_resolution(in.spec);
  const auto controls = latplan::generate_control_set(in.spec);
  std::uniform_int_distribution<int> cell(n / 4, n - 1 - n / 4), steps(min_steps, max_steps);
  std::uniform_int_distribution<std::size_t> pick(0, controls.size() - 1);
  std::bernoulli_distribution occ(density);

  for (;;)
  {
    in.grid = latplan::OccupancyGrid(square_geometry(n, res));
    for (auto& c : in.grid.cells)
      c = occ(rng) ? latplan::Cell::Occupied : latplan::Cell::Free;
    in.start = latplan::State::at_rest(in.spec, cell_center(in.grid.geometry, cell(rng), cell(rng)));

    latplan::State s = in.start;
    const int k = steps(rng);
    bool ok = !in.grid.occupied(s.x[0]);
    for (int i = 0; ok && i < k; ++i)
    {
      bool moved = false;
      for (int attempt = 0; attempt < 30 && !moved; ++attempt)
      {
        const auto p = latplan::propagate(s, controls[pick(rng)], in.spec);
        if (!latplan::check_dynamic_feasibility(p, in.spec) || latplan::primitive_collides_static(p, in.grid, in.spec))
          continue;
        s = p.end;
        moved = true;
      }
      ok = moved;
    }
    if (!ok || (s.x[0] - in.start.x[0]).norm() < res)
      continue;
    in.goal.center = s.x[0];
    in.goal.pos_tol = 0.3 * res;
    in.walk_steps = k;
    return in;
  }
}

/// Flips `count` random cells (never the one under `keep`); returns the
/// indices of every cell whose value changed.
inline std::vector<std::size_t> random_edits(std::mt19937_64& rng, latplan::OccupancyGrid& grid, int count, const Vec& keep)
{
  std::uniform_int_distribution<std::size_t> pick(0, grid.cells.size() - 1);
  const auto protect = grid.geometry.lookup(keep);
  std::vector<std::size_t> changed;
  for (int i = 0; i < count; ++i)
  {
    const std::size_t c = pick(rng);
    if (protect && c == *protect)
      continue;
    auto& v = grid.cells[c];
    v = v == latplan::Cell::Occupied ? latplan::Cell::Free : latplan::Cell::Occupied;
    changed.push_back(c);
  }
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  return changed;
}

/// Start-to-state costs over the lattice by plain Dijkstra, with goal states
/// treated as terminal (not expanded). Stops once costs exceed `limit`.
inline std::unordered_map<latplan::LatticeKey, double, latplan::LatticeKeyHash>
lattice_distances(const latplan::PlanningProblem& prob, double limit)
{
  using Entry = std::pair<double, std::size_t>;
  std::vector<latplan::State> states{prob.request().start};
  std::unordered_map<latplan::LatticeKey, double, latplan::LatticeKeyHash> dist;
  std::unordered_map<latplan::LatticeKey, std::size_t, latplan::LatticeKeyHash> ids;
  dist[prob.key(states[0])] = 0.0;
  ids[prob.key(states[0])] = 0;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  pq.push({0.0, 0});
  while (!pq.empty())
  {
    const auto [d, id] = pq.top();
    pq.pop();
    const latplan::State s = states[id];
    const auto k = prob.key(s);
    if (d != dist[k] || d > limit)
      continue;
    if (prob.is_goal(s))
      continue;
    for (const auto& e : prob.expand(s))
    {
      const auto nk = prob.key(e.primitive.end);
      const double nd = d + e.cost;
      auto it = dist.find(nk);
      if (it != dist.end() && it->second <= nd)
        continue;
      dist[nk] = nd;
      auto [iit, fresh] = ids.try_emplace(nk, states.size());
      if (fresh)
        states.push_back(e.primitive.end);
      pq.push({nd, iit->second});
    }
  }
  return dist;
}

/// Number of expanded, alive vertices whose LPA* key lies below the goal's
/// and whose g differs from the Dijkstra distance.
inline int g_mismatches(const latplan::SearchGraph& graph)
{
  const auto& prob = graph.problem();
  const double goal = graph.node(latplan::SearchGraph::kSink).g;
  const double limit = std::isfinite(goal) ? goal : 1e300;
  const auto dist = lattice_distances(prob, limit + 1.0);
  int bad = 0;
  for (std::size_t u = 1; u < graph.capacity(); ++u)
  {
    const auto& n = graph.node(static_cast<latplan::SearchGraph::NodeId>(u));
    if (!n.alive)
      continue;
    auto it = dist.find(n.key);
    const double d = it == dist.end() ? latplan::kInf : it->second;
    if (!(d + n.h < limit - 1e-9))
      continue;
    if (std::abs(n.g - d) > 1e-9)
      ++bad;
  }
  return bad;
}

inline Vec xy(double x, double y)
{
  Vec v(2);
  v << x, y;
  return v;
}

inline latplan::TeamRobot team_robot(int id, const Vec& from, const Vec& to, double period)
{
  latplan::TeamRobot r;
  r.id = id;
  r.spec = lattice_spec();
  r.geometry = latplan::ConvexPolytope::box(Vec::Zero(2), xy(0.3, 0.3));
  r.start = latplan::State::at_rest(r.spec, from);
  r.goal.center = to;
  r.goal.pos_tol = 0.2;
  r.goal.deriv_tol = {0.0};
  r.replan_period = period;
  return r;
}

/// Four robots swapping antipodal positions on an open 12 m square.
inline latplan::TeamScenario star_team(latplan::TeamMode mode)
{
  latplan::TeamScenario sc;
  sc.mode = mode;
  sc.T_max = 30.0;
  sc.rounds = 40;
  sc.world = latplan::World::make(latplan::OccupancyGrid(square_geometry(24, 0.5)));
  const double c = 6.25, R = 4.0;
  sc.robots = {team_robot(0, xy(c - R, c), xy(c + R, c), 1.0), team_robot(1, xy(c + R, c), xy(c - R, c), 2.0),
               team_robot(2, xy(c, c - R), xy(c, c + R), 1.0), team_robot(3, xy(c, c + R), xy(c, c - R), 2.0)};
  return sc;
}

/// Two rooms joined by a 1 m wide, 4 m long passage; two robots on each
/// side trade places.
inline latplan::TeamScenario tunnel_team(latplan::TeamMode mode)
{
  latplan::TeamScenario sc;
  sc.mode = mode;
  sc.T_max = 30.0;
  sc.rounds = 40;
  latplan::GridGeometry g;
  g.origin = Vec::Zero(2);
  g.resolution = 0.5;
  g.dims = {32, 16};
  latplan::OccupancyGrid grid(g);
  grid.fill_box(xy(6.0, 0.0), xy(10.0, 3.4));
  grid.fill_box(xy(6.0, 4.6), xy(10.0, 8.0));
  sc.world = latplan::World::make(grid);
  sc.robots = {team_robot(0, xy(2.25, 2.25), xy(13.25, 2.25), 1.0), team_robot(1, xy(2.25, 5.75), xy(13.25, 5.75), 2.0),
               team_robot(2, xy(13.25, 2.25), xy(2.25, 2.25), 1.0), team_robot(3, xy(13.25, 5.75), xy(2.25, 5.75), 2.0)};
  return sc;
}

} // namespace fixtures

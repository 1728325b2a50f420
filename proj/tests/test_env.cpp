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

#include <gtest/gtest.h>

#include "latplan/env.hpp"
#include "properties.hpp"

using namespace latplan;

namespace {

Vec v2(double x, double y)
{
  Vec v(2);
  v << x, y;
  return v;
}

GridGeometry geometry(int nx, int ny, double res)
{
  GridGeometry g;
  g.origin = Vec::Zero(2);
  g.resolution = res;
  g.dims = {nx, ny};
  return g;
}

MotionPrimitive line(Vec from, Vec vel, double dt)
{
  State s(2, 2);
  s.x[0] = std::move(from);
  s.x[1] = std::move(vel);
  return propagate(s, Control{Vec::Zero(2), 0.0}, dt, 2);
}

} // namespace

TEST(Grid, IndexRoundTrip)
{
  const auto g = geometry(7, 5, 0.3);
  for (std::size_t lin = 0; lin < g.cell_count(); ++lin)
  {
    const auto idx = g.unlinear(lin);
    EXPECT_EQ(g.linear(idx), lin);
    EXPECT_EQ(g.cell_of(g.center(idx)), idx);
  }
  EXPECT_FALSE(g.lookup(v2(-0.01, 0.1)).has_value());
  EXPECT_FALSE(g.lookup(v2(2.1, 0.1)).has_value());
}

TEST(Grid, OutOfBoundsFollowsWorkspaceFlag)
{
  OccupancyGrid grid(geometry(4, 4, 1.0));
  EXPECT_TRUE(grid.occupied(v2(-1, 1)));
  grid.bounded_workspace = false;
  EXPECT_FALSE(grid.occupied(v2(-1, 1)));
  grid.at({1, 1, 0}) = Cell::Unknown;
  EXPECT_FALSE(grid.occupied(v2(1.5, 1.5)));
}

TEST(Distance, AllFreeIsInfinite)
{
  const auto df = distance_transform(OccupancyGrid(geometry(6, 6, 0.5)));
  for (double d : df.d)
    EXPECT_TRUE(std::isinf(d));
  const auto pf = build_potential(df, 3.0, 1.0, 2.0);
  for (double u : pf.U)
    EXPECT_EQ(u, 0.0);
}

TEST(Distance, SingleOccupiedCell)
{
  OccupancyGrid grid(geometry(5, 5, 0.4));
  grid.at({2, 2, 0}) = Cell::Occupied;
  const auto df = distance_transform(grid);
  const auto& g = grid.geometry;
  EXPECT_EQ(df.d[g.linear({2, 2, 0})], 0.0);
  EXPECT_DOUBLE_EQ(df.d[g.linear({1, 2, 0})], 0.4);
  EXPECT_DOUBLE_EQ(df.d[g.linear({3, 2, 0})], 0.4);
  EXPECT_DOUBLE_EQ(df.d[g.linear({2, 1, 0})], 0.4);
  EXPECT_DOUBLE_EQ(df.d[g.linear({2, 3, 0})], 0.4);
  EXPECT_DOUBLE_EQ(df.d[g.linear({0, 0, 0})], std::sqrt(8.0) * 0.4);
}

TEST(Distance, ThreeDimensional)
{
  GridGeometry g;
  g.origin = Vec::Zero(3);
  g.resolution = 1.0;
  g.dims = {6, 5, 4};
  OccupancyGrid grid(g);
  grid.at({1, 1, 1}) = Cell::Occupied;
  grid.at({4, 3, 2}) = Cell::Occupied;
  const auto df = distance_transform(grid);
  const auto ref = oracle::brute_distance(grid);
  for (std::size_t i = 0; i < ref.size(); ++i)
    EXPECT_NEAR(df.d[i], ref[i], 1e-12);
}

TEST(Potential, Examples)
{
  PotentialField pf;
  pf.F_max = 4.0;
  pf.d_thr = 2.0;
  pf.k = 1.0;
  EXPECT_EQ(pf.value(0.0), 4.0);
  EXPECT_EQ(pf.value(2.0), 0.0);
  EXPECT_EQ(pf.value(1.0), 2.0);
  EXPECT_EQ(pf.value(5.0), 0.0);
  DistanceField df;
  EXPECT_THROW(build_potential(df, 0.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(build_potential(df, 1.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(build_potential(df, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(SampleCount, Examples)
{
  EXPECT_EQ(sample_count(1.0, 2.0, 0.25), 8);
  EXPECT_EQ(sample_count(0.1, 1.0, 0.5), 2);
  EXPECT_EQ(sample_count(0.5, 3.0, 0.1), 15);
}

TEST(CollisionCost, ZeroCases)
{
  OccupancyGrid grid(geometry(40, 40, 0.25));
  grid.fill_box(v2(0, 0), v2(1, 10));
  const auto world = World::make(grid, 5.0, 1.0, 2.0);
  // Far from the wall (d >= d_thr everywhere along it).
  EXPECT_EQ(collision_cost(line(v2(5, 5), v2(1, 0), 1.0), *world.potential, 8), 0.0);
  // Hover right next to the wall.
  const auto hover = line(v2(1.2, 5), v2(0, 0), 1.0);
  EXPECT_GT(world.potential->at(hover.position(0.0)), 0.0);
  EXPECT_EQ(collision_cost(hover, *world.potential, 8), 0.0);
}

TEST(CollisionCost, ConstantPotentialIsExact)
{
  // A band of constant U: cost equals U times path length.
  GridGeometry g = geometry(40, 40, 0.25);
  PotentialField pf;
  pf.geometry = g;
  pf.U.assign(g.cell_count(), 0.0);
  for (std::size_t i = 0; i < g.cell_count(); ++i)
  {
    const auto idx = g.unlinear(i);
    if (idx[1] >= 16 && idx[1] < 24)
      pf.U[i] = 3.0;
  }
  const auto p = line(v2(1, 5), v2(2, 0), 2.0);
  EXPECT_NEAR(collision_cost(p, pf, 16), 3.0 * 4.0, 1e-12);
}

TEST(StaticCollision, Examples)
{
  OccupancyGrid grid(geometry(40, 40, 0.25));
  grid.fill_box(v2(4, 4), v2(5, 5));
  SystemSpec spec;
  spec.v_max = 2.0;
  EXPECT_TRUE(primitive_collides_static(line(v2(3, 4.5), v2(2, 0), 1.0), grid, spec));
  EXPECT_FALSE(primitive_collides_static(line(v2(2, 2), v2(0, 0), 1.0), grid, spec));
  // Leaving a bounded workspace collides.
  EXPECT_TRUE(primitive_collides_static(line(v2(9.5, 2), v2(2, 0), 1.0), grid, spec));
}

TEST(Tunnel, Examples)
{
  State s(2, 2);
  s.x[0] = v2(1, 1);
  std::vector<MotionPrimitive> segs;
  for (auto u : {v2(1, 0), v2(0, 1), v2(-1, 0)})
  {
    segs.push_back(propagate(s, Control{u, 0.0}, 1.0, 2));
    s = segs.back().end;
  }
  const Trajectory ref(segs);
  const Tunnel tun(ref, 0.3, 0.05);
  EXPECT_TRUE(in_tunnel(segs[1], tun, 16));
  State off = segs[1].start;
  off.x[0] += v2(0.0, 0.6);
  off.x[0] += v2(0.6, 0.0);
  EXPECT_FALSE(in_tunnel(propagate(off, segs[1].control, 1.0, 2), tun, 16));
  const Tunnel open = Tunnel::unbounded(ref);
  EXPECT_TRUE(in_tunnel(line(v2(100, 100), v2(3, 3), 1.0), open, 16));
  EXPECT_THROW(Tunnel(ref, 0.0, 0.1), std::invalid_argument);
}

TEST(EnvProperties, DistanceTransformExact)
{
  props::Rng rng(31);
  const auto t = props::env_distance_exact(rng, 20);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(EnvProperties, PotentialShape)
{
  props::Rng rng(32);
  const auto t = props::env_potential_shape(rng, 10);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(EnvProperties, CollisionCostRefinement)
{
  props::Rng rng(33);
  const auto t = props::env_collision_cost_refinement(rng, 200);
  EXPECT_GE(t.cases, 150);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(EnvProperties, StaticCollisionVersusDense)
{
  props::Rng rng(34);
  const auto t = props::env_static_collision_vs_dense(rng, 500);
  EXPECT_EQ(t.failures, 0) << t.first;
}

TEST(EnvProperties, TunnelVersusDensePolyline)
{
  props::Rng rng(35);
  const auto t = props::env_tunnel_vs_dense(rng, 100);
  EXPECT_EQ(t.failures, 0) << t.first;
}

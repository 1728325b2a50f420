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

#include <chrono>
#include <queue>
#include <unordered_map>
#include <vector>

#include "search.hpp"

namespace latplan {

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// A* over the lattice induced by the control set. Ties on f prefer the
/// larger g, then the lexicographically smaller key.
inline PlanResult plan_astar(const PlanningProblem& problem)
{
  const auto t0 = std::chrono::steady_clock::now();
  const PlanRequest& req = problem.request();

  struct Node
  {
    LatticeKey key;
    State state;
    double g = kInf;
    std::size_t parent = 0;
    std::size_t control = 0;
    bool closed = false;
  };

  struct Entry
  {
    double f;
    double g;
    std::size_t id;
  };

  std::vector<Node> nodes;
  std::unordered_map<LatticeKey, std::size_t, LatticeKeyHash> index;

  auto worse = [&nodes](const Entry& a, const Entry& b) {
    if (a.f != b.f)
      return a.f > b.f;
    if (a.g != b.g)
      return a.g < b.g;
    return nodes[b.id].key < nodes[a.id].key;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  PlanResult result;

  if (problem.is_goal(req.start))
  {
    result.status = PlanStatus::Success;
    result.total_cost = 0.0;
    result.runtime = detail::seconds_since(t0);
    return result;
  }

  {
    Node start;
    start.key = problem.key(req.start);
    start.state = req.start;
    start.g = 0.0;
    index.emplace(start.key, 0);
    nodes.push_back(std::move(start));
    open.push({problem.heuristic(req.start), 0.0, 0});
  }

  bool horizon_hit = false;
  std::optional<std::size_t> goal;

  while (!open.empty())
  {
    const Entry top = open.top();
    open.pop();
    Node& node = nodes[top.id];
    if (node.closed || top.g != node.g)
      continue;
    node.closed = true;
    ++result.expansions;

    if (problem.is_goal(node.state))
    {
      goal = top.id;
      break;
    }
    if (result.expansions >= req.max_expansions)
      break;

    const State current = node.state;
    const double g = node.g;
    for (auto& succ : problem.expand(current, &horizon_hit))
    {
      const LatticeKey k = problem.key(succ.primitive.end);
      const double g_new = g + succ.cost;
      auto [it, inserted] = index.try_emplace(k, nodes.size());
      if (inserted)
      {
        Node n;
        n.key = k;
        nodes.push_back(std::move(n));
      }
      Node& target = nodes[it->second];
      if (target.closed || g_new >= target.g)
        continue;
      target.g = g_new;
      target.state = succ.primitive.end;
      target.parent = top.id;
      target.control = succ.control;
      open.push({g_new + problem.heuristic(target.state), g_new, it->second});
    }
  }

  if (!goal)
  {
    result.status = horizon_hit ? PlanStatus::HorizonExceeded : PlanStatus::NoPath;
    result.runtime = detail::seconds_since(t0);
    return result;
  }

  std::vector<std::size_t> chain;
  for (std::size_t id = *goal; id != 0; id = nodes[id].parent)
    chain.push_back(id);
  std::vector<MotionPrimitive> segs;
  segs.reserve(chain.size());
  State s = req.start;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
  {
    segs.push_back(propagate(s, problem.controls()[nodes[*it].control], problem.spec()));
    s = segs.back().end;
  }
  result.trajectory = Trajectory(std::move(segs));
  result.terms = problem.audit(result.trajectory);
  result.total_cost = nodes[*goal].g;
  result.status = PlanStatus::Success;
  result.runtime = detail::seconds_since(t0);
  return result;
}

inline PlanResult plan_astar(const SystemSpec& spec, const World& world, const PlanRequest& req)
{
  return plan_astar(PlanningProblem(spec, world, req));
}

} // namespace latplan

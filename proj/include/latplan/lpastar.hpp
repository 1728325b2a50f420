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
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "astar.hpp"
#include "search.hpp"

namespace latplan {

/// Changes to apply to a search graph between planning epochs.
struct MapDelta
{
  /// New static workspace snapshot; changed_cells lists the cells whose
  /// occupancy or potential differs from the previous one.
  std::optional<World> world;
  std::vector<std::size_t> changed_cells;
  /// Replacement set of moving obstacles.
  std::optional<std::vector<LVP>> obstacles;

  bool empty() const { return !world && changed_cells.empty() && !obstacles; }
};

/// Persistent LPA* store over the primitive lattice.
///
/// Node 0 is a virtual sink: every goal-region node has a zero-cost edge
/// into it, so the region goal becomes a single LPA* goal. Goal nodes have
/// no other successors.
class SearchGraph
{
public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kSink = 0;
  static constexpr NodeId kNone = std::numeric_limits<NodeId>::max();

  struct QEntry
  {
    double k1;
    bool under;
    double k2;
    NodeId id;
  };

  struct Edge
  {
    NodeId to = kNone;
    std::uint32_t control = 0;
    EdgeStatus status = EdgeStatus::Valid;
    double cost = kInf;
    CostTerms terms;
    Vec lo, hi;  ///< bounding box of the sampled positions
  };

  struct Node
  {
    LatticeKey key;
    State state;
    double g = kInf;
    double rhs = kInf;
    double h = 0.0;
    bool alive = true;
    bool expanded = false;
    bool goal = false;
    bool queued = false;
    QEntry qkey{};
    std::vector<Edge> succ;
    std::vector<std::pair<NodeId, std::uint32_t>> preds;
  };

  explicit SearchGraph(PlanningProblem problem)
  : _problem(std::move(problem))
  {
    reset();
  }

  SearchGraph(const SearchGraph&) = delete;
  SearchGraph& operator=(const SearchGraph&) = delete;

  const PlanningProblem& problem() const { return _problem; }

  /// Drops every cached vertex and restarts from the problem's start.
  void reset()
  {
    _nodes.clear();
    _index.clear();
    _cell_index.clear();
    _queue.clear();
    Node sink;
    sink.expanded = true;
    _nodes.push_back(std::move(sink));
    _start = add_node(_problem.request().start);
    _nodes[_start].rhs = 0.0;
    enqueue(_start);
  }

  /// Replaces the problem (goal, weights, ...) and resets the graph.
  void reset(PlanningProblem problem)
  {
    _problem = std::move(problem);
    reset();
  }

  NodeId start() const { return _start; }
  const Node& node(NodeId id) const { return _nodes[id]; }
  std::size_t capacity() const { return _nodes.size(); }

  std::size_t size() const
  {
    std::size_t n = 0;
    for (std::size_t i = 1; i < _nodes.size(); ++i)
      n += _nodes[i].alive ? 1 : 0;
    return n;
  }

  std::optional<NodeId> find(const LatticeKey& k) const
  {
    auto it = _index.find(k);
    if (it == _index.end())
      return std::nullopt;
    return it->second;
  }

  /// Runs the LPA* main loop until the sink is consistent and no queued
  /// key precedes it, then extracts the best trajectory.
  PlanResult plan()
  {
    const auto t0 = std::chrono::steady_clock::now();
    PlanResult result;
    const std::size_t cap = _problem.request().max_expansions;

    while (!_queue.empty())
    {
      const Node& sink = _nodes[kSink];
      const QEntry top = *_queue.begin();
      if (!before(top, entry_of(kSink)) && sink.g == sink.rhs)
        break;
      if (result.expansions >= cap)
        break;
      _queue.erase(_queue.begin());
      const NodeId u = top.id;
      _nodes[u].queued = false;
      if (u != kSink)
        ++result.expansions;

      Node& n = _nodes[u];
      if (n.g > n.rhs)
      {
        n.g = n.rhs;
        if (!n.expanded)
          generate(u);
        const double g = _nodes[u].g;
        for (const Edge& e : _nodes[u].succ)
        {
          if (e.to == kNone || e.to == _start || !(e.cost < kInf))
            continue;
          Node& v = _nodes[e.to];
          if (g + e.cost < v.rhs)
          {
            v.rhs = g + e.cost;
            requeue(e.to);
          }
        }
      }
      else
      {
        n.g = kInf;
        update_vertex(u);
        for (const Edge& e : _nodes[u].succ)
          if (e.to != kNone)
            update_vertex(e.to);
      }
    }

    const Node& sink = _nodes[kSink];
    if (!(sink.g < kInf) || sink.g != sink.rhs)
    {
      result.status = horizon_edges() ? PlanStatus::HorizonExceeded : PlanStatus::NoPath;
      result.runtime = detail::seconds_since(t0);
      return result;
    }

    result.trajectory = extract();
    result.terms = _problem.audit(result.trajectory);
    result.total_cost = sink.g;
    result.status = PlanStatus::Success;
    result.runtime = detail::seconds_since(t0);
    return result;
  }

  /// Re-evaluates cached edges affected by a map or obstacle change and
  /// queues the vertices that became inconsistent. Returns their count.
  std::size_t update_edges(const MapDelta& delta)
  {
    if (delta.empty())
      return 0;
    std::unordered_set<std::uint64_t> marked;
    auto mark = [&](NodeId u, std::uint32_t ei) {
      marked.insert((static_cast<std::uint64_t>(u) << 32) | ei);
    };

    if (delta.world)
      _problem.set_world(*delta.world);

    for (std::size_t cell : delta.changed_cells)
    {
      auto it = _cell_index.find(cell);
      if (it == _cell_index.end())
        continue;
      for (const auto& [u, ei] : it->second)
        if (_nodes[u].alive && ei < _nodes[u].succ.size())
          mark(u, ei);
    }

    if (delta.obstacles)
    {
      std::vector<SweptBox> boxes;
      const double t_lo = _nodes[_start].state.t;
      const double t_hi = _problem.horizon_end();
      for (const auto& o : _problem.request().obstacles)
        add_swept_box(o, t_lo, t_hi, boxes);
      for (const auto& o : *delta.obstacles)
        add_swept_box(o, t_lo, t_hi, boxes);
      _problem.set_obstacles(*delta.obstacles);

      for (NodeId u = 1; u < _nodes.size(); ++u)
      {
        const Node& n = _nodes[u];
        if (!n.alive || !n.expanded || n.goal)
          continue;
        for (std::uint32_t ei = 0; ei < n.succ.size(); ++ei)
        {
          const Edge& e = n.succ[ei];
          if (e.status == EdgeStatus::BeyondHorizon)
            continue;
          const double t0 = n.state.t, t1 = t0 + _problem.spec().dt;
          for (const auto& b : boxes)
            if (t1 >= b.t0 && t0 <= b.t1 && boxes_overlap(e.lo, e.hi, b.lo, b.hi))
            {
              mark(u, ei);
              break;
            }
        }
      }
    }

    std::set<NodeId> touched;
    for (std::uint64_t packed : marked)
    {
      const NodeId u = static_cast<NodeId>(packed >> 32);
      const std::uint32_t ei = static_cast<std::uint32_t>(packed & 0xffffffffu);
      Edge& e = _nodes[u].succ[ei];
      const MotionPrimitive p = propagate(_nodes[u].state, _problem.controls()[e.control], _problem.spec());
      const double old_cost = e.cost;
      evaluate_map(e, p);
      if (e.cost != old_cost)
        touched.insert(e.to);
    }

    std::size_t inconsistent = 0;
    for (NodeId v : touched)
    {
      update_vertex(v);
      if (_nodes[v].g != _nodes[v].rhs)
        ++inconsistent;
    }
    return inconsistent;
  }

  /// Moves the root to `new_start`, dropping every vertex it cannot reach
  /// through cached edges and recomputing start-to-state costs from cached
  /// edge costs only. A start that is not in the graph resets it.
  void prune(const State& new_start)
  {
    const auto found = find(_problem.key(new_start));
    if (!found || !_nodes[*found].alive)
    {
      _problem.set_start(new_start);
      reset();
      return;
    }
    const NodeId root = *found;
    if (root == _start)
      return;
    _problem.set_start(_nodes[root].state);
    _start = root;

    // Reachability over all cached edges.
    std::vector<char> reach(_nodes.size(), 0);
    reach[kSink] = 1;
    std::vector<NodeId> stack{root};
    reach[root] = 1;
    while (!stack.empty())
    {
      const NodeId u = stack.back();
      stack.pop_back();
      for (const Edge& e : _nodes[u].succ)
        if (e.to != kNone && !reach[e.to])
        {
          reach[e.to] = 1;
          stack.push_back(e.to);
        }
    }
    for (NodeId u = 1; u < _nodes.size(); ++u)
    {
      Node& n = _nodes[u];
      if (n.alive && !reach[u])
      {
        n.alive = false;
        _index.erase(n.key);
        std::vector<Edge>().swap(n.succ);
        std::vector<std::pair<NodeId, std::uint32_t>>().swap(n.preds);
      }
    }
    for (Node& n : _nodes)
      if (n.alive)
        std::erase_if(n.preds, [&](const auto& pe) { return !_nodes[pe.first].alive; });
    compact_cell_index();

    // A later start moves the horizon; admit edges that now fit.
    const double horizon = _problem.horizon_end();
    for (NodeId u = 1; u < _nodes.size(); ++u)
    {
      if (!_nodes[u].alive || !_nodes[u].expanded)
        continue;
      for (std::uint32_t ei = 0; ei < _nodes[u].succ.size(); ++ei)
      {
        if (_nodes[u].succ[ei].status != EdgeStatus::BeyondHorizon)
          continue;
        const MotionPrimitive p =
          propagate(_nodes[u].state, _problem.controls()[_nodes[u].succ[ei].control], _problem.spec());
        if (p.end.t > horizon + 1e-9)
          continue;
        connect(u, ei, p);
      }
    }

    // Start-to-state costs over cached valid edges.
    std::vector<double> dist(_nodes.size(), kInf);
    using QE = std::pair<double, NodeId>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    dist[root] = 0.0;
    pq.push({0.0, root});
    while (!pq.empty())
    {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d != dist[u])
        continue;
      for (const Edge& e : _nodes[u].succ)
      {
        if (e.to == kNone || !(e.cost < kInf))
          continue;
        const double nd = d + e.cost;
        if (nd < dist[e.to])
        {
          dist[e.to] = nd;
          pq.push({nd, e.to});
        }
      }
    }

    _queue.clear();
    for (NodeId u = 0; u < _nodes.size(); ++u)
    {
      Node& n = _nodes[u];
      n.queued = false;
      if (!n.alive)
        continue;
      n.rhs = dist[u];
      n.g = n.expanded ? dist[u] : kInf;
      if (n.g != n.rhs)
        enqueue(u);
    }
  }

  /// Every expanded, queue-free vertex satisfies g == rhs.
  bool expanded_consistent() const
  {
    for (NodeId u = 0; u < _nodes.size(); ++u)
    {
      const Node& n = _nodes[u];
      if (n.alive && n.expanded && !n.queued && n.g != n.rhs)
        return false;
    }
    return true;
  }

  /// Regenerates the successors of `u` from the control set and compares
  /// them with the cache (target keys and cost of valid edges).
  bool successor_cache_matches(NodeId u) const
  {
    const Node& n = _nodes[u];
    if (!n.expanded || n.goal)
      return true;
    std::size_t ei = 0;
    const LatticeKey own = n.key;
    for (std::uint32_t c = 0; c < _problem.controls().size(); ++c)
    {
      const MotionPrimitive p = propagate(n.state, _problem.controls()[c], _problem.spec());
      if (_problem.check_static(p) == EdgeStatus::Infeasible)
        continue;
      if (_problem.request().mode == PlanMode::Static && _problem.key(p.end) == own)
        continue;
      if (ei >= n.succ.size() || n.succ[ei].control != c)
        return false;
      const Edge& e = n.succ[ei++];
      if (e.to != kNone && !(_nodes[e.to].key == _problem.key(p.end)))
        return false;
      if (e.status == EdgeStatus::Valid)
      {
        if (_problem.check_map(p) != EdgeStatus::Valid)
          return false;
        if (std::abs(_problem.cost(_problem.terms(p)) - e.cost) > 1e-9)
          return false;
      }
    }
    return ei == n.succ.size();
  }

private:
  // Smaller k1 first; at equal k1 underconsistent vertices first, then the
  // larger k2 (deeper) and finally the smaller key, with the sink (empty
  // key) ahead of every real vertex.
  struct QLess
  {
    const std::vector<Node>* nodes;
    bool operator()(const QEntry& a, const QEntry& b) const
    {
      if (a.k1 != b.k1)
        return a.k1 < b.k1;
      if (a.under != b.under)
        return a.under;
      if (a.k2 != b.k2)
        return a.k2 > b.k2;
      if (a.id == b.id)
        return false;
      return (*nodes)[a.id].key < (*nodes)[b.id].key;
    }
  };

  struct SweptBox
  {
    Vec lo, hi;
    double t0, t1;
  };

  QEntry entry_of(NodeId u) const
  {
    const Node& n = _nodes[u];
    const double m = std::min(n.g, n.rhs);
    return {m + n.h, n.g < n.rhs, m, u};
  }

  bool before(const QEntry& a, const QEntry& b) const { return QLess{&_nodes}(a, b); }

  void enqueue(NodeId u)
  {
    Node& n = _nodes[u];
    n.qkey = entry_of(u);
    _queue.insert(n.qkey);
    n.queued = true;
  }

  void dequeue(NodeId u)
  {
    Node& n = _nodes[u];
    if (!n.queued)
      return;
    _queue.erase(n.qkey);
    n.queued = false;
  }

  void requeue(NodeId u)
  {
    dequeue(u);
    if (_nodes[u].g != _nodes[u].rhs)
      enqueue(u);
  }

  void update_vertex(NodeId u)
  {
    Node& n = _nodes[u];
    if (!n.alive)
      return;
    if (u != _start)
    {
      double best = kInf;
      for (const auto& [p, ei] : n.preds)
      {
        const Node& pn = _nodes[p];
        if (!pn.alive)
          continue;
        const double c = pn.succ[ei].cost;
        if (c < kInf && pn.g + c < best)
          best = pn.g + c;
      }
      n.rhs = best;
    }
    requeue(u);
  }

  NodeId add_node(const State& s)
  {
    const LatticeKey k = _problem.key(s);
    auto it = _index.find(k);
    if (it != _index.end())
      return it->second;
    const NodeId id = static_cast<NodeId>(_nodes.size());
    Node n;
    n.key = k;
    n.state = s;
    n.h = _problem.heuristic(s);
    n.goal = _problem.is_goal(s);
    _nodes.push_back(std::move(n));
    _index.emplace(k, id);
    return id;
  }

  // Map-dependent part of an edge: collision status, cost and the cells it
  // reads, registered for later invalidation.
  void evaluate_map(Edge& e, const MotionPrimitive& p)
  {
    e.status = _problem.check_map(p);
    if (e.status == EdgeStatus::Valid)
    {
      e.terms = _problem.terms(p);
      e.cost = _problem.cost(e.terms);
    }
    else
    {
      e.terms = {};
      e.cost = kInf;
    }
  }

  void index_cells(NodeId u, std::uint32_t ei, const MotionPrimitive& p)
  {
    const auto& geom = _problem.world().grid->geometry;
    const int ns = collision_sample_count(p, _problem.spec(), geom.resolution);
    const int nc = _problem.cost_samples(p);
    Edge& e = _nodes[u].succ[ei];
    e.lo = p.start.x[0];
    e.hi = p.start.x[0];
    std::size_t last = std::numeric_limits<std::size_t>::max();
    auto visit = [&](double t) {
      const Vec q = p.position(t);
      e.lo = e.lo.cwiseMin(q);
      e.hi = e.hi.cwiseMax(q);
      const auto lin = geom.lookup(q);
      if (lin && *lin != last)
      {
        auto& bucket = _cell_index[*lin];
        if (bucket.empty() || bucket.back() != std::pair<NodeId, std::uint32_t>{u, ei})
          bucket.emplace_back(u, ei);
        last = *lin;
      }
    };
    for (int i = 0; i < ns; ++i)
      visit(p.dt * i / (ns - 1));
    last = std::numeric_limits<std::size_t>::max();
    for (int i = 0; i < nc; ++i)
      visit(p.dt * i / (nc - 1));
  }

  // Turns edge ei of u into a real edge to the primitive's end vertex.
  void connect(NodeId u, std::uint32_t ei, const MotionPrimitive& p)
  {
    const NodeId v = add_node(p.end);
    Edge& e = _nodes[u].succ[ei];
    e.to = v;
    evaluate_map(e, p);
    index_cells(u, ei, p);
    _nodes[v].preds.emplace_back(u, ei);
  }

  void generate(NodeId u)
  {
    _nodes[u].expanded = true;
    if (_nodes[u].goal)
    {
      Edge e;
      e.to = kSink;
      e.cost = 0.0;
      e.status = EdgeStatus::Valid;
      e.lo = e.hi = _nodes[u].state.x[0];
      _nodes[u].succ.push_back(e);
      _nodes[kSink].preds.emplace_back(u, 0);
      return;
    }
    const State s = _nodes[u].state;
    const LatticeKey own = _nodes[u].key;
    const bool is_static = _problem.request().mode == PlanMode::Static;
    for (std::uint32_t c = 0; c < _problem.controls().size(); ++c)
    {
      MotionPrimitive p = propagate(s, _problem.controls()[c], _problem.spec());
      const EdgeStatus st = _problem.check_static(p);
      if (st == EdgeStatus::Infeasible)
        continue;
      if (is_static && _problem.key(p.end) == own)
        continue;
      Edge e;
      e.control = c;
      e.status = st;
      e.lo = e.hi = s.x[0];
      _nodes[u].succ.push_back(e);
      const auto ei = static_cast<std::uint32_t>(_nodes[u].succ.size() - 1);
      if (st == EdgeStatus::Valid)
        connect(u, ei, p);
    }
  }

  bool horizon_edges() const
  {
    for (const Node& n : _nodes)
      if (n.alive)
        for (const Edge& e : n.succ)
          if (e.status == EdgeStatus::BeyondHorizon)
            return true;
    return false;
  }

  Trajectory extract() const
  {
    // Best goal vertex feeding the sink.
    NodeId cur = kNone;
    double best = kInf;
    for (const auto& [p, ei] : _nodes[kSink].preds)
    {
      const Node& pn = _nodes[p];
      if (!pn.alive)
        continue;
      if (pn.g < best || (pn.g == best && cur != kNone && pn.key < _nodes[cur].key))
      {
        best = pn.g;
        cur = p;
      }
    }

    std::vector<std::uint32_t> controls;
    std::size_t guard = 0;
    while (cur != _start)
    {
      if (++guard > _nodes.size())
        throw std::logic_error("LPA*: parent chain does not reach the start");
      NodeId parent = kNone;
      std::uint32_t ctrl = 0;
      double b = kInf;
      for (const auto& [p, ei] : _nodes[cur].preds)
      {
        const Node& pn = _nodes[p];
        if (!pn.alive)
          continue;
        const double c = pn.g + pn.succ[ei].cost;
        if (c < b || (c == b && parent != kNone && pn.key < _nodes[parent].key))
        {
          b = c;
          parent = p;
          ctrl = pn.succ[ei].control;
        }
      }
      if (parent == kNone)
        throw std::logic_error("LPA*: vertex on the solution has no predecessor");
      controls.push_back(ctrl);
      cur = parent;
    }

    std::vector<MotionPrimitive> segs;
    State s = _nodes[_start].state;
    for (auto it = controls.rbegin(); it != controls.rend(); ++it)
    {
      segs.push_back(propagate(s, _problem.controls()[*it], _problem.spec()));
      s = segs.back().end;
    }
    return Trajectory(std::move(segs));
  }

  static bool boxes_overlap(const Vec& alo, const Vec& ahi, const Vec& blo, const Vec& bhi)
  {
    for (int k = 0; k < alo.size(); ++k)
      if (ahi[k] < blo[k] || bhi[k] < alo[k])
        return false;
    return true;
  }

  static void add_swept_box(const LVP& o, double t_lo, double t_hi, std::vector<SweptBox>& out)
  {
    const double a = std::max(t_lo, o.active_from);
    const double b = std::min(t_hi, o.active_until);
    if (b < a)
      return;
    SweptBox box;
    box.t0 = a;
    box.t1 = b;
    bool any = false;
    for (double t : {a, b, std::clamp(o.epoch, a, b)})
    {
      if (!std::isfinite(t))
        continue;
      std::vector<Vec> verts;
      try
      {
        verts = o.shape_at(t).vertices;
      }
      catch (const std::invalid_argument&)
      {
        continue;  // shrunk to nothing before its epoch
      }
      for (const Vec& v : verts)
      {
        if (!any)
        {
          box.lo = box.hi = v;
          any = true;
        }
        box.lo = box.lo.cwiseMin(v);
        box.hi = box.hi.cwiseMax(v);
      }
    }
    if (!any)
      return;
    if (!std::isfinite(b))
    {
      // Unbounded window: grow without limit along the motion.
      for (int k = 0; k < box.lo.size(); ++k)
      {
        box.lo[k] = -kInf;
        box.hi[k] = kInf;
      }
    }
    out.push_back(box);
  }

  void compact_cell_index()
  {
    for (auto it = _cell_index.begin(); it != _cell_index.end();)
    {
      std::erase_if(it->second, [&](const auto& pe) { return !_nodes[pe.first].alive; });
      if (it->second.empty())
        it = _cell_index.erase(it);
      else
        ++it;
    }
  }

  PlanningProblem _problem;
  std::vector<Node> _nodes;
  std::unordered_map<LatticeKey, NodeId, LatticeKeyHash> _index;
  std::unordered_map<std::size_t, std::vector<std::pair<NodeId, std::uint32_t>>> _cell_index;
  std::set<QEntry, QLess> _queue{QLess{&_nodes}};
  NodeId _start = 1;
};

inline PlanResult plan_lpastar(SearchGraph& graph) { return graph.plan(); }

inline std::size_t update_edges(SearchGraph& graph, const MapDelta& delta) { return graph.update_edges(delta); }

inline void prune_graph(SearchGraph& graph, const State& new_start) { graph.prune(new_start); }

} // namespace latplan

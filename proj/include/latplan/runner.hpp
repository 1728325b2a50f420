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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "astar.hpp"
#include "io.hpp"
#include "lpastar.hpp"
#include "multirobot.hpp"
#include "svg.hpp"

namespace latplan::io {

inline constexpr const char* kVersion = "0.1.0";

struct PotentialParams
{
  double F_max = 1.0;
  double d_thr = 1.0;
  double k = 1.0;
};

/// Tunnel built around the trajectory of an earlier run.
struct TunnelRef
{
  std::string from;
  double radius = 1.0;
  double step = 0.1;
};

/// One planning query; fields override the scenario defaults.
struct RunConfig
{
  std::string name = "plan";
  Weights weights;
  double theta = 2.0 * kPi;
  double T_max = kInf;
  PlanMode mode = PlanMode::Static;
  std::size_t max_expansions = 1'000'000;
  std::optional<TunnelRef> tunnel;
  /// Baseline: every cell with positive potential becomes an obstacle and
  /// the potential itself is dropped.
  bool apf_as_obstacles = false;
};

/// Obstacle whose true motion is piecewise polynomial in absolute time. The
/// planner only ever sees its position and velocity at observation time.
struct ScriptedObstacle
{
  struct Piece
  {
    double until = kInf;
    std::vector<Polynomial> axis;
  };

  ConvexPolytope shape;  ///< around the moving reference point
  double v_e = 0.0;
  std::vector<Piece> pieces;

  const Piece& piece_at(double t) const
  {
    for (const auto& p : pieces)
      if (t < p.until)
        return p;
    return pieces.back();
  }

  Vec position(double t) const
  {
    const Piece& p = piece_at(t);
    Vec v(static_cast<int>(p.axis.size()));
    for (std::size_t a = 0; a < p.axis.size(); ++a)
      v[static_cast<int>(a)] = p.axis[a](t);
    return v;
  }

  Vec velocity(double t) const
  {
    const Piece& p = piece_at(t);
    Vec v(static_cast<int>(p.axis.size()));
    for (std::size_t a = 0; a < p.axis.size(); ++a)
      v[static_cast<int>(a)] = p.axis[a].derivative_at(t, 1);
    return v;
  }

  /// What the planner is told at time t.
  LVP observe(double t, const ConvexPolytope& robot) const
  {
    LVP o;
    o.shape = minkowski_inflate(shape, robot).translated(position(t));
    o.v_c = velocity(t);
    o.v_e = v_e;
    o.epoch = t;
    o.active_from = t;
    return o;
  }
};

struct ReplanConfig
{
  double period = 1.0;
  int epochs = 30;
  /// Start with every cell Unknown and reveal the sensor wedge each epoch.
  bool reveal = false;
  double sensor_theta = 2.0 * kPi;
  double sensor_range = kInf;
  std::vector<ScriptedObstacle> scripted;
};

struct Scenario
{
  std::string name;
  fs::path file;
  SystemSpec spec;
  OccupancyGrid grid;
  std::optional<PotentialParams> potential;
  ConvexPolytope robot;  ///< body shape used to inflate moving obstacles
  State start;
  GoalRegion goal;
  std::vector<LVP> obstacles;  ///< as given, not yet inflated
  std::vector<RunConfig> runs;
  std::optional<ReplanConfig> replan;
  std::optional<TeamScenario> team;

  const RunConfig* run(const std::string& n) const
  {
    for (const auto& r : runs)
      if (r.name == n)
        return &r;
    return nullptr;
  }
};

enum ExitCode : int
{
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitNoPath = 2,
  kExitHorizon = 3,
  kExitUnsafe = 4,
};

inline int exit_code(PlanStatus s)
{
  switch (s)
  {
    case PlanStatus::Success: return kExitSuccess;
    case PlanStatus::NoPath: return kExitNoPath;
    case PlanStatus::HorizonExceeded: return kExitHorizon;
  }
  return kExitUsage;
}

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline PlanMode mode_from(const json& j, const std::string& where)
{
  const auto s = j.get<std::string>();
  if (s == "static")
    return PlanMode::Static;
  if (s == "dynamic")
    return PlanMode::Dynamic;
  throw SchemaError(where + ": mode is 'static' or 'dynamic'");
}

inline RunConfig run_from_json(const json& j, RunConfig base, const std::string& where)
{
  base.name = value_or(j, "name", base.name, where);
  if (j.contains("weights"))
    base.weights = weights_from_json(j["weights"], base.weights, where + "/weights");
  base.theta = value_or(j, "theta", base.theta, where);
  base.T_max = value_or(j, "T_max", base.T_max, where);
  if (j.contains("mode"))
    base.mode = mode_from(j["mode"], where + "/mode");
  base.max_expansions = value_or(j, "max_expansions", base.max_expansions, where);
  base.apf_as_obstacles = value_or(j, "apf_as_obstacles", base.apf_as_obstacles, where);
  if (j.contains("tunnel"))
  {
    const json& t = j["tunnel"];
    TunnelRef ref;
    ref.from = need(t, "from", where + "/tunnel").get<std::string>();
    ref.radius = number(need(t, "radius", where + "/tunnel"), where + "/tunnel/radius");
    ref.step = value_or(t, "step", ref.step, where + "/tunnel");
    base.tunnel = ref;
  }
  return base;
}

inline ScriptedObstacle scripted_from_json(const json& j, int dim, const std::string& where)
{
  ScriptedObstacle s;
  s.shape = polytope_from_json(need(j, "shape", where), dim, where + "/shape");
  s.v_e = value_or(j, "v_e", 0.0, where);
  const json& motion = need(j, "motion", where);
  for (std::size_t i = 0; i < motion.size(); ++i)
  {
    const std::string w = fmt::format("{}/motion/{}", where, i);
    ScriptedObstacle::Piece p;
    p.until = value_or(motion[i], "until", kInf, w);
    const json& coeffs = need(motion[i], "coeffs", w);
    if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != dim)
      throw SchemaError(w + "/coeffs: one coefficient list per axis");
    for (std::size_t a = 0; a < coeffs.size(); ++a)
    {
      std::vector<double> c;
      for (std::size_t k = 0; k < coeffs[a].size(); ++k)
        c.push_back(number(coeffs[a][k], fmt::format("{}/coeffs/{}/{}", w, a, k)));
      if (c.empty())
        throw SchemaError(w + "/coeffs: empty coefficient list");
      p.axis.emplace_back(c.begin(), c.end());
    }
    s.pieces.push_back(std::move(p));
  }
  if (s.pieces.empty())
    throw SchemaError(where + "/motion: need at least one piece");
  return s;
}

/// Scatters axis-aligned boxes over the grid, keeping a disc around the
/// start and goal free.
inline void scatter_boxes(OccupancyGrid& grid, const json& j, std::uint64_t seed, const Vec& keep_a,
                          const Vec& keep_b, const std::string& where)
{
  const int count = value_or(j, "count", 0, where);
  const double lo = value_or(j, "min_size", 0.5, where);
  const double hi = value_or(j, "max_size", 2.0, where);
  const double keep = value_or(j, "keep_clear", 1.0, where);
  std::mt19937_64 rng(seed);
  const auto& g = grid.geometry;
  const int m = g.dim();
  for (int placed = 0, tries = 0; placed < count && tries < 100 * count; ++tries)
  {
    Vec c(m), half(m);
    for (int k = 0; k < m; ++k)
    {
      c[k] = std::uniform_real_distribution<double>(g.origin[k], g.origin[k] + g.dims[k] * g.resolution)(rng);
      half[k] = 0.5 * std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    const auto gap = [&](const Vec& p) { return ((p - c).cwiseAbs() - half).cwiseMax(0.0).norm(); };
    if (gap(keep_a) < keep || gap(keep_b) < keep)
      continue;
    grid.fill_box(c - half, c + half);
    ++placed;
  }
}

} // namespace detail

/// Reads a scenario file. Relative "grid_file" and "obstacles_file" paths
/// resolve against the scenario's directory. `seed` replaces the scenario's
/// own seed for randomized maps.
inline Scenario load_scenario(const fs::path& path, std::optional<std::uint64_t> seed = std::nullopt)
{
  const json j = load_json(path);
  const fs::path dir = path.parent_path();
  try
  {
    Scenario sc;
    sc.file = path;
    sc.name = detail::value_or(j, "name", path.stem().string(), "");
    sc.spec = j.contains("spec") ? spec_from_json(j["spec"]) : spec_from_json(json::object());
    const int dim = sc.spec.dim;

    if (j.contains("grid_file"))
    {
      const fs::path gp = dir / j["grid_file"].get<std::string>();
      try
      {
        sc.grid = grid_from_json(load_json(gp));
      }
      catch (const SchemaError& e)
      {
        throw ParseError(gp.string(), 0, e.what());
      }
    }
    else
      sc.grid = grid_from_json(detail::need(j, "grid", ""));
    if (sc.grid.geometry.dim() != dim)
      throw SchemaError("/grid: dimension differs from /spec/dim");

    if (j.contains("potential"))
    {
      const json& p = j["potential"];
      sc.potential = PotentialParams{detail::value_or(p, "F_max", 1.0, "/potential"),
                                     detail::value_or(p, "d_thr", 1.0, "/potential"),
                                     detail::value_or(p, "k", 1.0, "/potential")};
    }
    sc.robot = j.contains("robot") ? polytope_from_json(j["robot"], dim, "/robot") : ConvexPolytope::point(dim);

    if (j.contains("start"))
      sc.start = state_from_json(j["start"], sc.spec, "/start");
    if (j.contains("goal"))
      sc.goal = goal_from_json(j["goal"], dim);

    if (j.contains("random_boxes"))
    {
      const json& rb = j["random_boxes"];
      const auto s = seed.value_or(detail::value_or<std::uint64_t>(rb, "seed", 1, "/random_boxes"));
      const Vec a = j.contains("start") ? sc.start.pos() : Vec(Vec::Zero(dim));
      const Vec b = j.contains("goal") ? sc.goal.center : a;
      detail::scatter_boxes(sc.grid, rb, s, a, b, "/random_boxes");
    }

    if (j.contains("obstacles_file"))
    {
      const fs::path op = dir / j["obstacles_file"].get<std::string>();
      try
      {
        sc.obstacles = obstacles_from_json(load_json(op), dim, "");
      }
      catch (const SchemaError& e)
      {
        throw ParseError(op.string(), 0, e.what());
      }
    }
    else if (j.contains("obstacles"))
      sc.obstacles = obstacles_from_json(j["obstacles"], dim);

    RunConfig base;
    if (j.contains("weights"))
      base.weights = weights_from_json(j["weights"]);
    base.theta = detail::value_or(j, "theta", base.theta, "");
    base.T_max = detail::value_or(j, "T_max", base.T_max, "");
    base.mode = j.contains("mode") ? detail::mode_from(j["mode"], "/mode")
                                   : (sc.obstacles.empty() ? PlanMode::Static : PlanMode::Dynamic);
    base.max_expansions = detail::value_or(j, "max_expansions", base.max_expansions, "");
    if (j.contains("runs"))
    {
      for (std::size_t i = 0; i < j["runs"].size(); ++i)
        sc.runs.push_back(detail::run_from_json(j["runs"][i], base, fmt::format("/runs/{}", i)));
    }
    else
      sc.runs.push_back(base);
    for (std::size_t i = 0; i < sc.runs.size(); ++i)
    {
      const auto& r = sc.runs[i];
      if (r.tunnel)
      {
        const auto it = std::find_if(sc.runs.begin(), sc.runs.begin() + static_cast<long>(i),
                                     [&](const RunConfig& o) { return o.name == r.tunnel->from; });
        if (it == sc.runs.begin() + static_cast<long>(i))
          throw SchemaError(fmt::format("/runs/{}/tunnel/from: no earlier run named '{}'", i, r.tunnel->from));
      }
      if ((r.apf_as_obstacles || r.weights.rho_c > 0.0) && !sc.potential)
        throw SchemaError(fmt::format("/runs/{}: needs a /potential section", i));
    }

    if (j.contains("replan"))
    {
      const json& rj = j["replan"];
      ReplanConfig rc;
      rc.period = detail::value_or(rj, "period", rc.period, "/replan");
      rc.epochs = detail::value_or(rj, "epochs", rc.epochs, "/replan");
      rc.reveal = detail::value_or(rj, "reveal", rc.reveal, "/replan");
      if (rj.contains("sensor"))
      {
        rc.sensor_theta = detail::value_or(rj["sensor"], "theta", rc.sensor_theta, "/replan/sensor");
        rc.sensor_range = detail::value_or(rj["sensor"], "range", rc.sensor_range, "/replan/sensor");
      }
      if (rj.contains("scripted"))
        for (std::size_t i = 0; i < rj["scripted"].size(); ++i)
          rc.scripted.push_back(detail::scripted_from_json(rj["scripted"][i], dim, fmt::format("/replan/scripted/{}", i)));
      const double steps = rc.period / sc.spec.dt;
      if (!(rc.period > 0.0) || std::abs(steps - std::round(steps)) > 1e-9)
        throw SchemaError("/replan/period: must be a positive multiple of dt");
      sc.replan = std::move(rc);
    }

    if (j.contains("team"))
    {
      const json& tj = j["team"];
      TeamScenario ts;
      const std::string mode = detail::value_or<std::string>(tj, "mode", "sequential", "/team");
      if (mode != "sequential" && mode != "decentralized")
        throw SchemaError("/team/mode: 'sequential' or 'decentralized'");
      ts.mode = mode == "sequential" ? TeamMode::Sequential : TeamMode::Decentralized;
      ts.T_max = detail::value_or(tj, "T_max", ts.T_max, "/team");
      ts.rounds = detail::value_or(tj, "rounds", ts.rounds, "/team");
      ts.max_expansions = detail::value_or(tj, "max_expansions", ts.max_expansions, "/team");
      const json& robots = detail::need(tj, "robots", "/team");
      for (std::size_t i = 0; i < robots.size(); ++i)
      {
        const std::string w = fmt::format("/team/robots/{}", i);
        const json& rj = robots[i];
        TeamRobot r;
        r.id = detail::value_or(rj, "id", static_cast<int>(i), w);
        r.spec = rj.contains("spec") ? spec_from_json(rj["spec"], w + "/spec") : sc.spec;
        r.geometry = polytope_from_json(detail::need(rj, "geometry", w), dim, w + "/geometry");
        r.start = state_from_json(detail::need(rj, "start", w), r.spec, w + "/start");
        r.goal = goal_from_json(detail::need(rj, "goal", w), dim, w + "/goal");
        r.weights = rj.contains("weights") ? weights_from_json(rj["weights"], base.weights, w + "/weights")
                                           : base.weights;
        r.replan_period = detail::value_or(rj, "replan_period", r.replan_period, w);
        ts.robots.push_back(std::move(r));
      }
      try
      {
        ts.validate();
      }
      catch (const std::invalid_argument& e)
      {
        throw SchemaError(std::string("/team: ") + e.what());
      }
      sc.team = std::move(ts);
    }
    return sc;
  }
  catch (const SchemaError& e)
  {
    throw ParseError(path.string(), 0, e.what());
  }
  catch (const json::exception& e)
  {
    throw ParseError(path.string(), 0, e.what());
  }
}

// ---------------------------------------------------------------------------
// Single plans

inline World make_world(const OccupancyGrid& grid, const std::optional<PotentialParams>& pp)
{
  return pp ? World::make(grid, pp->F_max, pp->d_thr, pp->k) : World::make(grid);
}

/// Occupancy grid in which every cell with positive potential is blocked.
inline OccupancyGrid apf_obstacle_grid(const OccupancyGrid& grid, const PotentialField& pf)
{
  OccupancyGrid out = grid;
  for (std::size_t i = 0; i < out.cells.size(); ++i)
    if (pf.U[i] > 0.0)
      out.cells[i] = Cell::Occupied;
  return out;
}

inline std::vector<LVP> inflated_obstacles(const std::vector<LVP>& obstacles, const ConvexPolytope& robot)
{
  std::vector<LVP> out = obstacles;
  for (auto& o : out)
    o.shape = minkowski_inflate(o.shape, robot);
  return out;
}

struct RunOutcome
{
  RunConfig config;
  PlanRequest request;
  World world;
  PlanResult result;
};

/// Plans every run of the scenario in order.
inline std::vector<RunOutcome> execute_runs(const Scenario& sc)
{
  const World base = make_world(sc.grid, sc.potential);
  const std::vector<LVP> obstacles = inflated_obstacles(sc.obstacles, sc.robot);
  std::vector<RunOutcome> out;
  for (const auto& cfg : sc.runs)
  {
    RunOutcome o;
    o.config = cfg;
    o.world = cfg.apf_as_obstacles ? World::make(apf_obstacle_grid(sc.grid, *base.potential)) : base;
    PlanRequest& req = o.request;
    req.start = sc.start;
    req.goal = sc.goal;
    req.weights = cfg.weights;
    req.theta = cfg.theta;
    req.T_max = cfg.T_max;
    req.mode = cfg.mode;
    req.max_expansions = cfg.max_expansions;
    req.obstacles = obstacles;
    if (cfg.tunnel)
    {
      const auto it = std::find_if(out.begin(), out.end(), [&](const RunOutcome& r) {
        return r.config.name == cfg.tunnel->from;
      });
      if (it == out.end() || !it->result.success())
      {
        spdlog::warn("run '{}': reference run '{}' has no trajectory", cfg.name, cfg.tunnel->from);
        o.result.status = it == out.end() ? PlanStatus::NoPath : it->result.status;
        out.push_back(std::move(o));
        continue;
      }
      req.tunnel = std::make_shared<const Tunnel>(it->result.trajectory, cfg.tunnel->radius, cfg.tunnel->step);
    }
    o.result = plan_astar(PlanningProblem(sc.spec, o.world, req));
    spdlog::info("run '{}': {} cost {:.6g}, {} expansions, {:.1f} ms", cfg.name, to_string(o.result.status),
                 o.result.total_cost, o.result.expansions, o.result.runtime * 1e3);
    out.push_back(std::move(o));
  }
  return out;
}

/// Smallest distance-field value along the trajectory, sampled every `step`.
inline double min_static_clearance(const Trajectory& traj, const DistanceField& df, double step = 0.01)
{
  double best = kInf;
  const double T = traj.duration();
  const auto n = static_cast<std::size_t>(std::ceil(T / step));
  for (std::size_t i = 0; i <= n; ++i)
    best = std::min(best, df.at(evaluate_trajectory(traj, std::min(T, i * step)).pos()));
  return best;
}

/// Signed distance-like clearance of point p from a moving obstacle at
/// absolute time t; +inf while the obstacle is inactive.
inline double lvp_clearance(const LVP& o, const Vec& p, double t)
{
  if (!o.active_at(t))
    return kInf;
  double best = -kInf;
  for (std::size_t j = 0; j < o.shape.faces.size(); ++j)
  {
    const auto& f = o.shape.faces[j];
    best = std::max(best, (f.a.dot(p) - o.face_offset_at(j, t)) / f.a.norm());
  }
  return best;
}

/// Dense check of a trajectory (absolute times) against linearly moving
/// obstacles. Returns the smallest clearance seen.
inline double min_lvp_clearance(const Trajectory& traj, const std::vector<LVP>& obstacles, double step = 1e-3)
{
  double best = kInf;
  const double T = traj.duration(), t0 = traj.start_time();
  const auto n = static_cast<std::size_t>(std::ceil(T / step));
  for (std::size_t i = 0; i <= n; ++i)
  {
    const double t = std::min(T, i * step);
    const Vec p = evaluate_trajectory(traj, t).pos();
    for (const auto& o : obstacles)
      best = std::min(best, lvp_clearance(o, p, t0 + t));
  }
  return best;
}

struct OutputOptions
{
  fs::path out_dir = "out";
  bool svg = true;
};

inline SvgFigure base_figure(const OccupancyGrid& grid, const World& world)
{
  SvgFigure fig(grid.geometry);
  if (world.potential)
    fig.add_potential(*world.potential);
  fig.add_grid(grid);
  return fig;
}

/// Plans every run and writes <run>.csv, <run>.stats.json and a combined
/// plot. Returns the exit code of the first failing run, or 0.
inline int run_plan(const Scenario& sc, const OutputOptions& opt)
{
  const auto outcomes = execute_runs(sc);
  static const char* palette[] = {"#1f5fd0", "#20a040", "#d08020", "#9030c0", "#c02060"};
  int code = kExitSuccess;
  const World world = make_world(sc.grid, sc.potential);
  SvgFigure fig = base_figure(sc.grid, world);
  double shown = 0.0;
  for (const auto& o : outcomes)
    if (o.result.success())
      shown = std::max(shown, o.result.trajectory.duration());
  for (const auto& o : sc.obstacles)
    for (int k = 0; k <= 4; ++k)
    {
      const double t = sc.start.t + shown * k / 4.0;
      if (o.active_at(t))
        fig.add_polytope(o.shape_at(t), "#808080", 0.08 + 0.12 * k);
    }
  for (std::size_t i = 0; i < outcomes.size(); ++i)
  {
    const auto& o = outcomes[i];
    json stats = stats_json(o.result, o.config.weights);
    stats["run"] = o.config.name;
    atomic_write(opt.out_dir / (o.config.name + ".stats.json"), stats.dump(2) + "\n");
    if (o.result.success())
    {
      atomic_write(opt.out_dir / (o.config.name + ".csv"), trajectory_csv(o.result.trajectory));
      const char* color = palette[i % 5];
      fig.add_trajectory(o.result.trajectory, color);
      if (sc.spec.yaw_enabled)
        fig.add_yaw_marks(o.result.trajectory, color);
    }
    else if (code == kExitSuccess)
      code = exit_code(o.result.status);
  }
  fig.add_marker(sc.start.pos(), "#000000");
  fig.add_marker(sc.goal.center, "#20a040");
  fig.add_label(sc.name);
  if (opt.svg)
    atomic_write(opt.out_dir / (sc.name + ".svg"), fig.str(kVersion));
  return code;
}

// ---------------------------------------------------------------------------
// Replanning simulation

struct EpochStats
{
  int epoch = 0;
  double tau = 0.0;
  PlanStatus status = PlanStatus::NoPath;
  double cost = kInf;
  std::size_t expansions = 0;
  double plan_ms = 0.0;    ///< LPA* search alone
  double replan_ms = 0.0;  ///< prune + edge update + LPA* search
  std::size_t revealed = 0;
  std::size_t changed_cells = 0;
  std::optional<PlanStatus> astar_status;
  double astar_cost = kInf;
  std::size_t astar_expansions = 0;
  double astar_ms = 0.0;
};

struct ReplanOutcome
{
  std::vector<EpochStats> epochs;
  Trajectory executed;
  bool reached_goal = false;
  PlanStatus status = PlanStatus::NoPath;
  double min_obstacle_clearance = kInf;  ///< against the true obstacle motions
  std::size_t static_hits = 0;           ///< dense samples inside occupied cells
  OccupancyGrid known;
};

namespace detail {

inline double sensor_heading(const State& s, const SystemSpec& spec, const Vec& goal, double previous)
{
  if (spec.yaw_enabled)
    return s.yaw;
  if (s.dim() >= 2 && spec.order >= 2 && horizontal_speed(s.vel()) > kMinSpeedForHeading)
    return heading_of(s.vel());
  if (std::isnan(previous) && s.dim() >= 2)
    return std::atan2(goal[1] - s.pos()[1], goal[0] - s.pos()[0]);
  return std::isnan(previous) ? 0.0 : previous;
}

// Copies ground truth into `known` for every Unknown cell inside the wedge.
inline std::size_t reveal(OccupancyGrid& known, const OccupancyGrid& truth, const Vec& pos, double heading,
                          double theta, double range)
{
  std::size_t n = 0;
  const auto& g = known.geometry;
  for (std::size_t lin = 0; lin < known.cells.size(); ++lin)
  {
    if (known.cells[lin] != Cell::Unknown)
      continue;
    const Vec c = g.center(g.unlinear(lin));
    const Vec d = c - pos;
    if (d.norm() > range)
      continue;
    if (theta < 2.0 * kPi && d.size() >= 2 && d.head(2).norm() > 0.0 &&
        std::abs(angle_diff(std::atan2(d[1], d[0]), heading)) > 0.5 * theta)
      continue;
    known.cells[lin] = truth.cells[lin];
    ++n;
  }
  return n;
}

inline std::vector<std::size_t> changed_cells(const World& a, const World& b)
{
  std::vector<std::size_t> out;
  const auto& ga = *a.grid;
  const auto& gb = *b.grid;
  for (std::size_t i = 0; i < ga.cells.size(); ++i)
  {
    const bool occ_a = ga.cells[i] == Cell::Occupied, occ_b = gb.cells[i] == Cell::Occupied;
    const bool pot = a.potential && b.potential && a.potential->U[i] != b.potential->U[i];
    if (occ_a != occ_b || pot)
      out.push_back(i);
  }
  return out;
}

} // namespace detail

/// Receding-horizon loop: sense, update the persistent LPA* graph, replan,
/// then execute one period of the new plan (or of the previous one when
/// the search fails). Uses the scenario's first run for weights and limits.
inline ReplanOutcome simulate_replanning(const Scenario& sc, bool compare_astar)
{
  if (!sc.replan)
    throw std::invalid_argument("scenario has no replan section");
  const ReplanConfig& rc = *sc.replan;
  const RunConfig& cfg = sc.runs.front();
  using clock = std::chrono::steady_clock;
  const auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  ReplanOutcome out;
  out.known = sc.grid;
  if (rc.reveal)
    std::fill(out.known.cells.begin(), out.known.cells.end(), Cell::Unknown);
  const std::vector<LVP> fixed = inflated_obstacles(sc.obstacles, sc.robot);

  PlanRequest req;
  req.start = sc.start;
  req.goal = sc.goal;
  req.weights = cfg.weights;
  req.theta = cfg.theta;
  req.T_max = cfg.T_max;
  req.mode = cfg.mode;
  req.max_expansions = cfg.max_expansions;

  const auto observe = [&](double tau) {
    std::vector<LVP> obs = fixed;
    for (const auto& s : rc.scripted)
      obs.push_back(s.observe(tau, sc.robot));
    return obs;
  };

  std::unique_ptr<SearchGraph> graph;
  World world;
  State state = sc.start;
  double heading = std::nan("");
  Trajectory plan;
  std::size_t next_segment = 0;
  std::vector<MotionPrimitive> executed;
  const auto steps = static_cast<std::size_t>(std::llround(rc.period / sc.spec.dt));

  for (int e = 0; e < rc.epochs; ++e)
  {
    EpochStats st;
    st.epoch = e;
    st.tau = state.t;
    heading = detail::sensor_heading(state, sc.spec, sc.goal.center, heading);
    st.revealed = detail::reveal(out.known, sc.grid, state.pos(), heading, rc.sensor_theta, rc.sensor_range);
    const std::vector<LVP> obs = observe(state.t);

    const auto t0 = clock::now();
    if (!graph)
    {
      world = make_world(out.known, sc.potential);
      req.obstacles = obs;
      graph = std::make_unique<SearchGraph>(PlanningProblem(sc.spec, world, req));
    }
    else
    {
      prune_graph(*graph, state);
      MapDelta delta;
      if (st.revealed > 0)
      {
        World next = make_world(out.known, sc.potential);
        delta.changed_cells = detail::changed_cells(world, next);
        st.changed_cells = delta.changed_cells.size();
        world = next;
        delta.world = world;
      }
      if (!obs.empty())
        delta.obstacles = obs;
      update_edges(*graph, delta);
    }
    const auto t1 = clock::now();
    const PlanResult r = plan_lpastar(*graph);
    st.plan_ms = ms_since(t1);
    st.replan_ms = ms_since(t0);
    st.status = r.status;
    st.cost = r.total_cost;
    st.expansions = r.expansions;

    if (compare_astar)
    {
      PlanRequest fresh = req;
      fresh.start = state;
      fresh.obstacles = obs;
      const PlanResult a = plan_astar(PlanningProblem(sc.spec, world, fresh));
      st.astar_status = a.status;
      st.astar_cost = a.total_cost;
      st.astar_expansions = a.expansions;
      st.astar_ms = a.runtime * 1e3;
    }
    spdlog::debug("epoch {} tau {:.2f}: {} cost {:.6g}, {} expansions, {:.2f} ms", e, st.tau, to_string(r.status),
                  r.total_cost, r.expansions, st.replan_ms);
    out.epochs.push_back(st);
    out.status = r.status;

    if (r.success())
    {
      plan = r.trajectory;
      next_segment = 0;
    }
    else
      spdlog::warn("epoch {}: {}; following the previous plan", e, to_string(r.status));

    // Advance one period along the plan, re-propagated from the true state
    // so the executed trajectory is continuous and correctly time-stamped.
    std::size_t advanced = 0;
    for (; advanced < steps && next_segment < plan.size(); ++advanced, ++next_segment)
    {
      const auto& seg = plan.segments()[next_segment];
      executed.push_back(propagate(state, seg.control, seg.dt, seg.order));
      state = executed.back().end;
    }
    if (sc.goal.contains(state))
    {
      out.reached_goal = true;
      out.status = PlanStatus::Success;
      break;
    }
    if (advanced == 0)
    {
      spdlog::warn("epoch {}: no plan to follow, stopping", e);
      break;
    }
  }

  out.executed = Trajectory(std::move(executed));
  if (!out.executed.empty())
  {
    const double T = out.executed.duration(), t0 = out.executed.start_time();
    const auto n = static_cast<std::size_t>(std::ceil(T / 1e-3));
    std::vector<ConvexPolytope> bodies;
    for (const auto& s : rc.scripted)
      bodies.push_back(minkowski_inflate(s.shape, sc.robot));
    for (std::size_t i = 0; i <= n; ++i)
    {
      const double t = std::min(T, i * 1e-3);
      const Vec p = evaluate_trajectory(out.executed, t).pos();
      if (sc.grid.occupied(p))
        ++out.static_hits;
      for (std::size_t k = 0; k < rc.scripted.size(); ++k)
        out.min_obstacle_clearance = std::min(
          out.min_obstacle_clearance, signed_clearance(bodies[k], p - rc.scripted[k].position(t0 + t)));
      for (const auto& o : fixed)
        out.min_obstacle_clearance = std::min(out.min_obstacle_clearance, lvp_clearance(o, p, t0 + t));
    }
  }
  return out;
}

inline std::string epoch_csv(const std::vector<EpochStats>& epochs)
{
  std::string s = "epoch,tau,status,cost,expansions,plan_ms,replan_ms,revealed,changed_cells,"
                  "astar_status,astar_cost,astar_expansions,astar_ms\n";
  for (const auto& e : epochs)
    s += fmt::format("{},{:.17g},{},{:.17g},{},{:.3f},{:.3f},{},{},{},{:.17g},{},{:.3f}\n", e.epoch, e.tau,
                     to_string(e.status), e.cost, e.expansions, e.plan_ms, e.replan_ms, e.revealed, e.changed_cells,
                     e.astar_status ? to_string(*e.astar_status) : "", e.astar_cost, e.astar_expansions, e.astar_ms);
  return s;
}

inline int run_replan_sim(const Scenario& sc, const OutputOptions& opt, bool compare_astar)
{
  const ReplanOutcome r = simulate_replanning(sc, compare_astar);
  atomic_write(opt.out_dir / (sc.name + ".epochs.csv"), epoch_csv(r.epochs));
  if (!r.executed.empty())
    atomic_write(opt.out_dir / (sc.name + ".executed.csv"), trajectory_csv(r.executed));

  json summary;
  summary["reached_goal"] = r.reached_goal;
  summary["status"] = to_string(r.status);
  summary["epochs"] = r.epochs.size();
  summary["duration"] = r.executed.duration();
  summary["min_obstacle_clearance"] = std::isinf(r.min_obstacle_clearance) ? json(nullptr) : json(r.min_obstacle_clearance);
  summary["static_hits"] = r.static_hits;
  std::size_t lpa = 0, astar = 0;
  for (const auto& e : r.epochs)
  {
    lpa += e.expansions;
    astar += e.astar_expansions;
  }
  summary["lpastar_expansions"] = lpa;
  if (compare_astar)
    summary["astar_expansions"] = astar;
  atomic_write(opt.out_dir / (sc.name + ".summary.json"), summary.dump(2) + "\n");

  if (opt.svg)
  {
    SvgFigure fig = base_figure(r.known, make_world(r.known, sc.potential));
    fig.add_trajectory(r.executed, "#1f5fd0");
    const double T = r.executed.duration();
    for (int i = 0; i <= 4 && T > 0.0; ++i)
    {
      const double t = T * i / 4.0;
      for (const auto& s : sc.replan->scripted)
        fig.add_polytope(s.shape.translated(s.position(r.executed.start_time() + t)), "#c02020", 0.1 + 0.15 * i);
      fig.add_polytope(sc.robot.translated(evaluate_trajectory(r.executed, t).pos()), "#1f5fd0", 0.1 + 0.15 * i);
    }
    fig.add_marker(sc.start.pos(), "#000000");
    fig.add_marker(sc.goal.center, "#20a040");
    fig.add_label(sc.name + " (replanning)");
    atomic_write(opt.out_dir / (sc.name + ".svg"), fig.str(kVersion));
  }
  if (r.reached_goal)
    return r.min_obstacle_clearance > -1e-6 && r.static_hits == 0 ? kExitSuccess : kExitUnsafe;
  return r.status == PlanStatus::Success ? kExitNoPath : exit_code(r.status);
}

// ---------------------------------------------------------------------------
// Teams

inline TeamScenario team_of(const Scenario& sc)
{
  if (!sc.team)
    throw std::invalid_argument("scenario has no team section");
  TeamScenario ts = *sc.team;
  ts.world = make_world(sc.grid, sc.potential);
  return ts;
}

inline json clearance_json(const TeamResult& res, const TeamScenario& ts)
{
  json j;
  j["pass"] = res.clearance.pass();
  j["min_clearance"] = res.clearance.min_clearance();
  j["all_reached"] = res.all_reached();
  j["planning_time_ms"] = res.planning_time * 1e3;
  json pairs = json::array();
  for (const auto& p : res.clearance.pairs)
    pairs.push_back({{"i", ts.robots[p.i].id}, {"j", ts.robots[p.j].id}, {"min_clearance", p.min_clearance},
                     {"at_time", p.at_time}, {"pass", p.pass}});
  j["pairs"] = pairs;
  json robots = json::array();
  for (std::size_t i = 0; i < res.robots.size(); ++i)
  {
    const auto& r = res.robots[i];
    robots.push_back({{"id", ts.robots[i].id}, {"status", to_string(r.status)}, {"reached_goal", r.reached_goal},
                      {"duration", r.trajectory.duration()}, {"expansions", r.expansions},
                      {"plans", r.plans}, {"failed_plans", r.failed_plans},
                      {"planning_time_ms", r.planning_time * 1e3}});
  }
  j["robots"] = robots;
  return j;
}

/// Exit 0 iff every robot reaches its goal and the pairwise check passes.
inline int run_multirobot(const Scenario& sc, const OutputOptions& opt)
{
  const TeamScenario ts = team_of(sc);
  const TeamResult res = plan_team(ts);
  static const char* palette[] = {"#1f5fd0", "#20a040", "#d08020", "#9030c0", "#c02060", "#208090"};
  SvgFigure fig = base_figure(sc.grid, ts.world);
  for (std::size_t i = 0; i < res.robots.size(); ++i)
  {
    const auto& traj = res.robots[i].trajectory;
    if (!traj.empty())
      atomic_write(opt.out_dir / fmt::format("robot_{}.csv", ts.robots[i].id), trajectory_csv(traj));
    const char* color = palette[i % 6];
    fig.add_polytope(ts.robots[i].geometry.translated(ts.robots[i].start.pos()), color, 0.3);
    fig.add_polytope(ts.robots[i].geometry.translated(ts.robots[i].goal.center), color, 0.1);
    fig.add_trajectory(traj, color);
  }
  atomic_write(opt.out_dir / "clearance.json", clearance_json(res, ts).dump(2) + "\n");
  fig.add_label(sc.name);
  if (opt.svg)
    atomic_write(opt.out_dir / (sc.name + ".svg"), fig.str(kVersion));

  for (const auto& r : res.robots)
    if (!r.reached_goal)
      return r.status == PlanStatus::Success ? kExitNoPath : exit_code(r.status);
  return res.clearance.pass() ? kExitSuccess : kExitUnsafe;
}

} // namespace latplan::io

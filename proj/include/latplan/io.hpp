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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "multirobot.hpp"
#include "search.hpp"

namespace latplan::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Malformed input file. `line` is 0 when the problem is not tied to a line
/// (a missing key, a wrong array length); the JSON path is then in the text.
class ParseError : public std::runtime_error
{
public:
  ParseError(std::string file, std::size_t line, const std::string& what)
  : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", file, line, what) : fmt::format("{}: {}", file, what))
  , _file(std::move(file))
  , _line(line)
  {
  }

  const std::string& file() const { return _file; }
  std::size_t line() const { return _line; }

private:
  std::string _file;
  std::size_t _line;
};

/// Content error inside an otherwise well-formed JSON document.
struct SchemaError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline std::string read_text(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temporary and renames it into place, so readers
/// never observe a half-written file.
inline void atomic_write(const fs::path& path, const std::string& content)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline json parse_json(const std::string& text, const std::string& file)
{
  try
  {
    return json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(file, line, e.what());
  }
}

inline json load_json(const fs::path& path) { return parse_json(read_text(path), path.string()); }

// ---------------------------------------------------------------------------
// JSON readers. Each takes the value plus its JSON-pointer-like location for
// error messages.

namespace detail {

inline const json& need(const json& j, const char* key, const std::string& where)
{
  if (!j.is_object())
    throw SchemaError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(fmt::format("{}: missing key '{}'", where, key));
  return *it;
}

inline double number(const json& j, const std::string& where)
{
  if (j.is_string())
  {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf" || s == "Infinity")
      return kInf;
  }
  if (!j.is_number())
    throw SchemaError(where + ": expected a number");
  return j.get<double>();
}

template <class T>
T value_or(const json& j, const char* key, T fallback, const std::string& where)
{
  const auto it = j.find(key);
  if (it == j.end())
    return fallback;
  if constexpr (std::is_same_v<T, double>)
    return number(*it, where + "/" + key);
  else
  {
    try
    {
      return it->get<T>();
    }
    catch (const json::exception& e)
    {
      throw SchemaError(fmt::format("{}/{}: {}", where, key, e.what()));
    }
  }
}

} // namespace detail

inline Vec vec_from_json(const json& j, const std::string& where, int dim = -1)
{
  if (!j.is_array())
    throw SchemaError(where + ": expected an array");
  if (dim >= 0 && static_cast<int>(j.size()) != dim)
    throw SchemaError(fmt::format("{}: expected {} entries, got {}", where, dim, j.size()));
  if (j.empty() || j.size() > 3)
    throw SchemaError(where + ": vectors have 1 to 3 entries");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = detail::number(j[i], fmt::format("{}/{}", where, i));
  return v;
}

inline json to_json(const Vec& v)
{
  json out = json::array();
  for (int i = 0; i < v.size(); ++i)
    out.push_back(v[i]);
  return out;
}

inline SystemSpec spec_from_json(const json& j, const std::string& where = "/spec")
{
  SystemSpec s;
  s.dim = detail::value_or(j, "dim", s.dim, where);
  s.order = detail::value_or(j, "order", s.order, where);
  s.u_max = detail::value_or(j, "u_max", s.u_max, where);
  s.du = detail::value_or(j, "du", s.du, where);
  s.dt = detail::value_or(j, "dt", s.dt, where);
  s.v_max = detail::value_or(j, "v_max", s.v_max, where);
  s.a_max = detail::value_or(j, "a_max", s.a_max, where);
  s.j_max = detail::value_or(j, "j_max", s.j_max, where);
  s.yaw_enabled = detail::value_or(j, "yaw_enabled", s.yaw_enabled, where);
  s.u_psi_max = detail::value_or(j, "u_psi_max", s.u_psi_max, where);
  s.du_psi = detail::value_or(j, "du_psi", s.du_psi, where);
  try
  {
    s.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw SchemaError(where + ": " + e.what());
  }
  return s;
}

inline json to_json(const SystemSpec& s)
{
  return json{{"dim", s.dim},          {"order", s.order},         {"u_max", s.u_max},
              {"du", s.du},            {"dt", s.dt},               {"v_max", s.v_max},
              {"a_max", s.a_max},      {"j_max", s.j_max},         {"yaw_enabled", s.yaw_enabled},
              {"u_psi_max", s.u_psi_max}, {"du_psi", s.du_psi}};
}

inline Weights weights_from_json(const json& j, Weights w = {}, const std::string& where = "/weights")
{
  w.rho_T = detail::value_or(j, "rho_T", w.rho_T, where);
  w.rho_c = detail::value_or(j, "rho_c", w.rho_c, where);
  w.rho_psi = detail::value_or(j, "rho_psi", w.rho_psi, where);
  if (w.rho_T < 0.0 || w.rho_c < 0.0 || w.rho_psi < 0.0)
    throw SchemaError(where + ": weights must be non-negative");
  return w;
}

/// {"pos": [...], "vel": [...], "acc": [...], "yaw": r, "t": s}; omitted
/// derivatives are zero.
inline State state_from_json(const json& j, const SystemSpec& spec, const std::string& where)
{
  State s = State::at_rest(spec, vec_from_json(detail::need(j, "pos", where), where + "/pos", spec.dim));
  static const char* names[] = {"pos", "vel", "acc", "jerk"};
  for (int k = 1; k < spec.order; ++k)
    if (j.contains(names[k]))
      s.x[k] = vec_from_json(j[names[k]], where + "/" + names[k], spec.dim);
  s.yaw = detail::value_or(j, "yaw", 0.0, where);
  s.t = detail::value_or(j, "t", 0.0, where);
  return s;
}

/// {"center": [...], "pos_tol": r, "deriv_tol": [v_tol, a_tol, ...]}.
inline GoalRegion goal_from_json(const json& j, int dim, const std::string& where = "/goal")
{
  GoalRegion g;
  g.center = vec_from_json(detail::need(j, "center", where), where + "/center", dim);
  g.pos_tol = detail::value_or(j, "pos_tol", 0.0, where);
  if (j.contains("deriv_tol"))
    for (std::size_t k = 0; k < j["deriv_tol"].size(); ++k)
      g.deriv_tol.push_back(detail::number(j["deriv_tol"][k], fmt::format("{}/deriv_tol/{}", where, k)));
  if (g.pos_tol < 0.0)
    throw SchemaError(where + ": pos_tol must be non-negative");
  return g;
}

/// Either {"faces": [[a..., b], ...]} with optional "vertices", or
/// {"box": {"center": [...], "half": [...]}}.
inline ConvexPolytope polytope_from_json(const json& j, int dim, const std::string& where)
{
  if (j.contains("box"))
  {
    const json& b = j["box"];
    return ConvexPolytope::box(vec_from_json(detail::need(b, "center", where + "/box"), where + "/box/center", dim),
                               vec_from_json(detail::need(b, "half", where + "/box"), where + "/box/half", dim));
  }
  const json& fj = detail::need(j, "faces", where);
  std::vector<Face> faces;
  for (std::size_t i = 0; i < fj.size(); ++i)
  {
    const std::string fw = fmt::format("{}/faces/{}", where, i);
    if (!fj[i].is_array() || static_cast<int>(fj[i].size()) != dim + 1)
      throw SchemaError(fmt::format("{}: expected {} numbers (normal then offset)", fw, dim + 1));
    Face f{Vec(dim), detail::number(fj[i][dim], fw)};
    for (int k = 0; k < dim; ++k)
      f.a[k] = detail::number(fj[i][k], fw);
    faces.push_back(std::move(f));
  }
  ConvexPolytope poly;
  try
  {
    poly = ConvexPolytope::from_faces(std::move(faces));
  }
  catch (const std::exception& e)
  {
    throw SchemaError(where + ": " + e.what());
  }
  if (j.contains("vertices"))
    for (std::size_t i = 0; i < j["vertices"].size(); ++i)
    {
      const Vec v = vec_from_json(j["vertices"][i], fmt::format("{}/vertices/{}", where, i), dim);
      if (!poly.contains(v, 1e-6))
        throw SchemaError(fmt::format("{}/vertices/{}: vertex violates the face inequalities", where, i));
    }
  return poly;
}

inline json to_json(const ConvexPolytope& p)
{
  json faces = json::array();
  for (const auto& f : p.faces)
  {
    json row = to_json(f.a);
    row.push_back(f.b);
    faces.push_back(row);
  }
  json verts = json::array();
  for (const auto& v : p.vertices)
    verts.push_back(to_json(v));
  return json{{"faces", faces}, {"vertices", verts}};
}

/// Moving obstacle: shape fields as in polytope_from_json plus "v_c", "v_e",
/// "epoch" and "active": [from, until].
inline LVP lvp_from_json(const json& j, int dim, const std::string& where)
{
  LVP o;
  o.shape = polytope_from_json(j, dim, where);
  o.v_c = j.contains("v_c") ? vec_from_json(j["v_c"], where + "/v_c", dim) : Vec(Vec::Zero(dim));
  o.v_e = detail::value_or(j, "v_e", 0.0, where);
  o.epoch = detail::value_or(j, "epoch", 0.0, where);
  if (j.contains("active"))
  {
    const json& a = j["active"];
    if (!a.is_array() || a.size() != 2)
      throw SchemaError(where + "/active: expected [from, until]");
    o.active_from = detail::number(a[0], where + "/active/0");
    o.active_until = detail::number(a[1], where + "/active/1");
  }
  if (o.v_e < 0.0)
    throw SchemaError(where + ": v_e must be non-negative");
  return o;
}

inline std::vector<LVP> obstacles_from_json(const json& j, int dim, const std::string& where = "/obstacles")
{
  if (!j.is_array())
    throw SchemaError(where + ": expected a list");
  std::vector<LVP> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(lvp_from_json(j[i], dim, fmt::format("{}/{}", where, i)));
  return out;
}

/// {"origin", "resolution", "dims", "cells"} with cells listed axis 0
/// fastest (0 free, 1 occupied, 2 unknown). "cells" may be omitted in favour
/// of "fill" plus "boxes": [{"lo", "hi", "value"}], applied in order to
/// cells whose centers fall inside.
inline OccupancyGrid grid_from_json(const json& j, const std::string& where = "/grid")
{
  GridGeometry g;
  const json& dims = detail::need(j, "dims", where);
  if (!dims.is_array() || dims.empty() || dims.size() > 3)
    throw SchemaError(where + "/dims: expected 1 to 3 positive integers");
  for (const auto& d : dims)
  {
    if (!d.is_number_integer() || d.get<int>() <= 0)
      throw SchemaError(where + "/dims: expected positive integers");
    g.dims.push_back(d.get<int>());
  }
  const int m = static_cast<int>(g.dims.size());
  g.origin = j.contains("origin") ? vec_from_json(j["origin"], where + "/origin", m) : Vec(Vec::Zero(m));
  g.resolution = detail::number(detail::need(j, "resolution", where), where + "/resolution");
  try
  {
    g.validate();
  }
  catch (const std::exception& e)
  {
    throw SchemaError(where + ": " + e.what());
  }

  const auto to_cell = [&](const json& v, const std::string& w) {
    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 2)
      throw SchemaError(w + ": cell values are 0, 1 or 2");
    return static_cast<Cell>(v.get<int>());
  };

  OccupancyGrid grid(g, j.contains("fill") ? to_cell(j["fill"], where + "/fill") : Cell::Free);
  grid.bounded_workspace = detail::value_or(j, "bounded", true, where);
  if (j.contains("cells"))
  {
    const json& cells = j["cells"];
    if (!cells.is_array() || cells.size() != grid.cells.size())
      throw SchemaError(fmt::format("{}/cells: dims give {} cells, array has {}", where, grid.cells.size(),
                                    cells.is_array() ? cells.size() : 0));
    for (std::size_t i = 0; i < cells.size(); ++i)
      grid.cells[i] = to_cell(cells[i], fmt::format("{}/cells/{}", where, i));
  }
  if (j.contains("boxes"))
    for (std::size_t i = 0; i < j["boxes"].size(); ++i)
    {
      const json& b = j["boxes"][i];
      const std::string w = fmt::format("{}/boxes/{}", where, i);
      const Cell value = b.contains("value") ? to_cell(b["value"], w + "/value") : Cell::Occupied;
      grid.fill_box(vec_from_json(detail::need(b, "lo", w), w + "/lo", m),
                    vec_from_json(detail::need(b, "hi", w), w + "/hi", m), value);
    }
  return grid;
}

inline json to_json(const OccupancyGrid& grid)
{
  json cells = json::array();
  for (Cell c : grid.cells)
    cells.push_back(static_cast<int>(c));
  return json{{"origin", to_json(grid.geometry.origin)},
              {"resolution", grid.geometry.resolution},
              {"dims", grid.geometry.dims},
              {"cells", cells}};
}

// ---------------------------------------------------------------------------
// Trajectory CSV

inline const char* axis_name(int a)
{
  static const char* names[] = {"x", "y", "z"};
  return names[a];
}

inline std::string csv_header(int dim, int order)
{
  std::string h = "t";
  for (int a = 0; a < dim; ++a)
    h += fmt::format(",{}", axis_name(a));
  for (int k = 1; k < order; ++k)
    for (int a = 0; a < dim; ++a)
      h += fmt::format(",d{}_{}", k, axis_name(a));
  h += ",yaw,segment_index";
  for (int a = 0; a < dim; ++a)
    h += fmt::format(",u_{}", axis_name(a));
  h += ",u_psi\n";
  return h;
}

/// One row per segment start state carrying that segment's control, plus a
/// final row with the end state. Times are absolute; numbers use %.17g so a
/// reload reproduces the doubles exactly.
inline std::string trajectory_csv(const Trajectory& traj)
{
  if (traj.empty())
    throw std::invalid_argument("trajectory_csv: empty trajectory");
  const auto& segs = traj.segments();
  const int dim = segs.front().dim();
  const int order = segs.front().order;
  std::string out = csv_header(dim, order);
  const auto row = [&](const State& s, std::size_t idx, const Control& c) {
    out += fmt::format("{:.17g}", s.t);
    for (int a = 0; a < dim; ++a)
      out += fmt::format(",{:.17g}", s.x[0][a]);
    for (int k = 1; k < order; ++k)
      for (int a = 0; a < dim; ++a)
        out += fmt::format(",{:.17g}", s.x[k][a]);
    out += fmt::format(",{:.17g},{}", s.yaw, idx);
    for (int a = 0; a < dim; ++a)
      out += fmt::format(",{:.17g}", c.u[a]);
    out += fmt::format(",{:.17g}\n", c.u_psi);
  };
  for (std::size_t i = 0; i < segs.size(); ++i)
    row(segs[i].start, i, segs[i].control);
  State end = segs.back().end;
  end.t = segs.back().start.t + segs.back().dt;
  row(end, segs.size() - 1, segs.back().control);
  return out;
}

/// Rebuilds a trajectory from its CSV: the first row gives the initial
/// state and every row's control is propagated up to the next row's time.
inline Trajectory trajectory_from_csv(const std::string& text, const std::string& file = "<csv>")
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(file, 1, "empty file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ','))
      cols.push_back(c);
  }
  const auto dim = static_cast<int>(std::count_if(cols.begin(), cols.end(), [](const std::string& c) {
    return c == "x" || c == "y" || c == "z";
  }));
  if (dim < 1 || cols.size() < static_cast<std::size_t>(dim) * 2 + 4)
    throw ParseError(file, 1, "unrecognized header");
  const int order = static_cast<int>((cols.size() - 4 - 2 * dim) / dim) + 1;
  if (csv_header(dim, order) != line + "\n")
    throw ParseError(file, 1, "unrecognized header");

  struct Row
  {
    State s;
    Control c;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
      try
      {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size())
          throw std::invalid_argument(cell);
      }
      catch (const std::exception&)
      {
        throw ParseError(file, lineno, "not a number: '" + cell + "'");
      }
    }
    if (v.size() != cols.size())
      throw ParseError(file, lineno, fmt::format("expected {} columns, got {}", cols.size(), v.size()));
    Row r{State(dim, order), Control{Vec(dim), 0.0}};
    std::size_t c = 0;
    r.s.t = v[c++];
    for (int k = 0; k < order; ++k)
      for (int a = 0; a < dim; ++a)
        r.s.x[k][a] = v[c++];
    r.s.yaw = v[c++];
    ++c;  // segment index
    for (int a = 0; a < dim; ++a)
      r.c.u[a] = v[c++];
    r.c.u_psi = v[c];
    if (!rows.empty() && !(r.s.t > rows.back().s.t))
      throw ParseError(file, lineno, "time stamps must increase");
    rows.push_back(std::move(r));
  }
  if (rows.size() < 2)
    throw ParseError(file, lineno, "need at least two rows");

  std::vector<MotionPrimitive> segs;
  State s = rows.front().s;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
  {
    segs.push_back(propagate(s, rows[i].c, rows[i + 1].s.t - rows[i].s.t, order));
    s = segs.back().end;
  }
  return Trajectory(std::move(segs));
}

inline Trajectory load_trajectory_csv(const fs::path& path)
{
  return trajectory_from_csv(read_text(path), path.string());
}

// ---------------------------------------------------------------------------
// Statistics

/// Cost decomposition of a plan; the four weighted terms sum to total_cost.
inline json stats_json(const PlanResult& r, const Weights& w)
{
  json j;
  j["status"] = to_string(r.status);
  j["expansions"] = r.expansions;
  j["runtime_ms"] = r.runtime * 1e3;
  if (r.success())
  {
    j["total_cost"] = r.total_cost;
    j["J_q"] = r.terms.effort;
    j["rho_T_T"] = w.rho_T * r.terms.duration;
    j["rho_c_J_c"] = w.rho_c * r.terms.collision;
    j["rho_psi_J_psi"] = w.rho_psi * r.terms.yaw;
    j["T"] = r.terms.duration;
    j["J_c"] = r.terms.collision;
    j["J_psi"] = r.terms.yaw;
  }
  else
    j["total_cost"] = nullptr;
  j["weights"] = json{{"rho_T", w.rho_T}, {"rho_c", w.rho_c}, {"rho_psi", w.rho_psi}};
  return j;
}

} // namespace latplan::io

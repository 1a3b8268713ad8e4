#pragma once

// Mesh/solution serialization: a JSON mesh format that round-trips
// coordinates bit-exactly (numbers printed with 17 significant digits),
// legacy VTK 2.0 ASCII export, and solution/convergence writers.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvd/bvp.hpp"
#include "mvd/generate.hpp"
#include "mvd/grid.hpp"

namespace mvd {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt17(Point2 p) {
  return "[" + fmt17(p.x) + ", " + fmt17(p.y) + "]";
}

inline const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::D: return "D";
    case NodeRole::VCircum: return "Vc";
    case NodeRole::VClip: return "Vb";
  }
  return "?";
}

/// Mesh file writer. Field order and float formatting are fixed so that
/// identical grids produce byte-identical files.
inline std::string mesh_to_json(const MvdGrid& g) {
  std::ostringstream os;
  os << "{\n  \"format\": \"mvd-mesh\",\n  \"version\": 1,\n";
  os << "  \"domain\": [";
  const auto& dv = g.domain.vertices();
  for (std::size_t i = 0; i < dv.size(); ++i)
    os << (i ? ", " : "") << fmt17(dv[i]);
  os << "],\n";
  os << "  \"nodes\": [\n";
  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    os << "    {\"x\": " << fmt17(n.pos.x) << ", \"y\": " << fmt17(n.pos.y)
       << ", \"role\": \"" << role_name(n.role) << "\", \"boundary\": "
       << (n.boundary ? "true" : "false")
       << ", \"s_full\": " << fmt17(n.s_full) << "}"
       << (k + 1 < g.node_count() ? "," : "") << "\n";
  }
  os << "  ],\n  \"cells\": [\n";
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    os << "    {\"d_tail\": " << c.d_tail << ", \"d_head\": " << c.d_head
       << ", \"v_tail\": " << c.v_tail << ", \"v_head\": " << c.v_head
       << ", \"center\": " << fmt17(c.center)
       << ", \"area\": " << fmt17(c.area)
       << ", \"boundary\": " << (c.boundary ? "true" : "false") << "}"
       << (m + 1 < g.cell_count() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  return os.str();
}

inline void write_mesh_json(const MvdGrid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write mesh file: " + path);
  out << mesh_to_json(g);
}

/// Reads a mesh file and rebuilds the grid, recomputing frames and
/// lengths from the stored coordinates (bit-identical to the original
/// build) and validating the stored measures.
inline MvdGrid load_mesh_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mesh file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("mesh file " + path + ": JSON parse error: " + e.what());
  }

  MvdGrid g;
  try {
    if (j.at("format") != "mvd-mesh")
      throw IoError("mesh file " + path + ": not an mvd-mesh file");
    std::vector<Point2> dom;
    for (const auto& v : j.at("domain"))
      dom.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    g.domain = ConvexPolygon(dom);

    for (const auto& nj : j.at("nodes")) {
      GridNode n;
      n.pos = {nj.at("x").get<double>(), nj.at("y").get<double>()};
      const std::string role = nj.at("role").get<std::string>();
      if (role == "D") n.role = NodeRole::D;
      else if (role == "Vc") n.role = NodeRole::VCircum;
      else if (role == "Vb") n.role = NodeRole::VClip;
      else throw IoError("mesh file " + path + ": unknown node role " + role);
      n.boundary = nj.at("boundary").get<bool>();
      n.s_full = nj.at("s_full").get<double>();
      n.s = 0.5 * n.s_full;
      g.nodes.push_back(n);
      if (n.role == NodeRole::D) ++g.n_d_nodes;
    }

    for (const auto& cj : j.at("cells")) {
      Cell c;
      c.d_tail = cj.at("d_tail").get<int>();
      c.d_head = cj.at("d_head").get<int>();
      c.v_tail = cj.at("v_tail").get<int>();
      c.v_head = cj.at("v_head").get<int>();
      c.center = {cj.at("center").at(0).get<double>(),
                  cj.at("center").at(1).get<double>()};
      c.boundary = cj.at("boundary").get<bool>();
      const double stored_area = cj.at("area").get<double>();
      const int nn = static_cast<int>(g.nodes.size());
      for (int id : {c.d_tail, c.d_head, c.v_tail, c.v_head})
        if (id < 0 || id >= nn)
          throw IoError("mesh file " + path + ": cell node id out of range");
      // stored tail/head order already satisfies the frame convention
      const Point2 dt = g.nodes[c.d_tail].pos;
      const Point2 dh = g.nodes[c.d_head].pos;
      c.l_d = dist(dt, dh);
      c.l_v = dist(g.nodes[c.v_tail].pos, g.nodes[c.v_head].pos);
      if (c.l_d <= 0.0 || c.l_v <= 0.0)
        throw IoError("mesh file " + path + ": degenerate cell diagonal");
      c.e2 = (1.0 / c.l_d) * (dh - dt);
      c.e1 = rot90cw(c.e2);
      c.area = 0.5 * c.l_d * c.l_v;
      if (std::abs(c.area - stored_area) >
          1e-12 * std::max(1.0, std::abs(stored_area)))
        throw IoError("mesh file " + path +
                      ": stored cell area disagrees with the diagonals");
      g.cells.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("mesh file " + path + ": " + e.what());
  }

  g.node_cells.assign(g.nodes.size(), {});
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    g.node_cells[c.v_tail].push_back({m, +1, true});
    g.node_cells[c.v_head].push_back({m, -1, true});
    g.node_cells[c.d_tail].push_back({m, +1, false});
    g.node_cells[c.d_head].push_back({m, -1, false});
  }
  return g;
}

/// Cheap structural invariants re-checked before any solve; throws
/// InadmissibleError naming the offender.
inline void check_grid_invariants(const MvdGrid& g) {
  const double meas = g.domain.area();
  const double diam = g.domain.diameter();
  double sum_sd = 0, sum_sv = 0, sum_star = 0, sum_s = 0;
  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    if (n.s_full < 0)
      throw InadmissibleError("node " + std::to_string(k) +
                              ": negative control volume");
    if (n.role == NodeRole::VClip && n.s_full != 0.0)
      throw InadmissibleError("node " + std::to_string(k) +
                              ": boundary clip node with nonzero measure");
    (n.role == NodeRole::D ? sum_sd : sum_sv) += n.s_full;
    sum_s += n.s;
  }
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    sum_star += c.area;
    if (!(c.l_v > kEpsGeom * diam) || !(c.l_d > kEpsGeom * diam))
      throw InadmissibleError("cell " + std::to_string(m) +
                              ": degenerate diagonal");
    if (std::abs(dot(c.e1, c.e2)) > 1e-14 ||
        std::abs(cross(c.e1, c.e2) - 1.0) > 1e-14)
      throw InadmissibleError("cell " + std::to_string(m) +
                              ": frame not orthonormal");
    if (g.nodes[c.d_tail].role != NodeRole::D ||
        g.nodes[c.d_head].role != NodeRole::D ||
        g.nodes[c.v_tail].role == NodeRole::D ||
        g.nodes[c.v_head].role == NodeRole::D)
      throw InadmissibleError("cell " + std::to_string(m) +
                              ": diagonal endpoints have wrong roles");
    if (c.boundary && g.nodes[c.v_head].role != NodeRole::VClip)
      throw InadmissibleError("cell " + std::to_string(m) +
                              ": boundary cell must end at a clip node");
    if (c.boundary && dist(c.center, g.nodes[c.v_head].pos) > kEpsGeom * diam)
      throw InadmissibleError("cell " + std::to_string(m) +
                              ": boundary cell center must be the clip node");
    // the diagonal lines cross at the center, on the open D-segment
    const double u = dot(c.center - g.nodes[c.d_tail].pos, c.e2);
    if (!(u > 0.0) || !(u < c.l_d))
      throw InadmissibleError("cell " + std::to_string(m) +
                              ": center off the open D-diagonal");
  }
  const auto close = [&](double v, const char* what) {
    if (std::abs(v - meas) > 1e-10 * meas)
      throw InadmissibleError(std::string(what) + " = " + std::to_string(v) +
                              " does not match meas(domain) = " +
                              std::to_string(meas));
  };
  close(sum_sd, "sum of D control volumes");
  close(sum_sv, "sum of V control volumes");
  close(sum_star, "sum of cell areas");
  close(sum_s, "sum of merged node weights");
}

/// Legacy VTK 2.0 ASCII, DATASET UNSTRUCTURED_GRID. Interior cells are
/// VTK_QUAD kites (d_tail, v_tail, d_head, v_head), boundary cells
/// VTK_TRIANGLE; scalar node fields -> POINT_DATA, vector cell fields
/// (global frame, zero third component) -> CELL_DATA.
inline void write_vtk(
    const MvdGrid& g,
    const std::vector<std::pair<std::string, const ScalarGridFunction*>>& scalars,
    const std::vector<std::pair<std::string, const VectorCellFunction*>>& vectors,
    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write VTK file: " + path);
  out << "# vtk DataFile Version 2.0\n";
  out << "mvd grid\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << g.node_count() << " double\n";
  for (const GridNode& n : g.nodes)
    out << fmt17(n.pos.x) << " " << fmt17(n.pos.y) << " 0\n";

  int list_len = 0;
  for (const Cell& c : g.cells) list_len += c.boundary ? 4 : 5;
  out << "CELLS " << g.cell_count() << " " << list_len << "\n";
  for (const Cell& c : g.cells) {
    if (c.boundary)
      out << "3 " << c.d_tail << " " << c.v_tail << " " << c.d_head << "\n";
    else
      out << "4 " << c.d_tail << " " << c.v_tail << " " << c.d_head << " "
          << c.v_head << "\n";
  }
  out << "CELL_TYPES " << g.cell_count() << "\n";
  for (const Cell& c : g.cells) out << (c.boundary ? 5 : 9) << "\n";

  if (!scalars.empty()) {
    out << "POINT_DATA " << g.node_count() << "\n";
    for (const auto& [name, fn] : scalars) {
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (double v : fn->values) out << fmt17(v) << "\n";
    }
  }
  if (!vectors.empty()) {
    out << "CELL_DATA " << g.cell_count() << "\n";
    for (const auto& [name, fn] : vectors) {
      out << "VECTORS " << name << " double\n";
      for (int m = 0; m < g.cell_count(); ++m) {
        const Point2 v = to_global(g, *fn, m);
        out << fmt17(v.x) << " " << fmt17(v.y) << " 0\n";
      }
    }
  }
}

struct SolutionInfo {
  ProblemKind kind;
  SolveStats stats;
  bool has_error = false;
  double l2_error = 0.0;
};

inline std::string solution_to_json(const MvdGrid& g, const SolutionInfo& info,
                                    const ScalarGridFunction* scalar,
                                    const VectorCellFunction* vect) {
  std::ostringstream os;
  os << "{\n  \"problem\": \"" << problem_name(info.kind) << "\",\n";
  os << "  \"nodes\": " << g.node_count() << ",\n";
  os << "  \"cells\": " << g.cell_count() << ",\n";
  os << "  \"iterations\": " << info.stats.iterations << ",\n";
  os << "  \"relative_residual\": " << fmt17(info.stats.relative_residual)
     << ",\n";
  os << "  \"converged\": " << (info.stats.converged ? "true" : "false");
  if (info.has_error) os << ",\n  \"l2_error\": " << fmt17(info.l2_error);
  if (scalar) {
    os << ",\n  \"values\": [";
    for (std::size_t i = 0; i < scalar->values.size(); ++i)
      os << (i ? ", " : "") << fmt17(scalar->values[i]);
    os << "]";
  }
  if (vect) {
    os << ",\n  \"components\": [";
    for (int m = 0; m < g.cell_count(); ++m) {
      const Point2 v = to_global(g, *vect, m);
      os << (m ? ", " : "") << fmt17(v);
    }
    os << "]";
  }
  os << "\n}\n";
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << body;
}

}  // namespace mvd

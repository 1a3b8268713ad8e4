#pragma once

// Merged Voronoi-Delaunay grid: the union node set (D-nodes and Voronoi
// vertices), one cell per Delaunay edge with orthogonal diagonals, local
// frames, control-volume measures and the discrete inner products.
//
// Interior Delaunay edges whose dual Voronoi edge degenerates (cocircular
// triangle fans, e.g. every square of an exact lattice) produce no cell;
// the surrounding cells still tile the domain because the merged Voronoi
// vertex carries the union of the fan triangles as its control volume.
//
// A cell's V-diagonal always lies on the perpendicular bisector of its
// D-diagonal, so the diagonal lines cross at the D-edge midpoint. The
// Delaunay property guarantees S* = |e1-extent| * L_D / 2 > 0 even when
// an obtuse triangle pushes a circumcenter across the shared edge (the
// cell is then a non-convex "dart"); such cells are admissible and are
// only surfaced through admissibility_report.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvd/tessellation.hpp"

namespace mvd {

enum class NodeRole : std::uint8_t { D, VCircum, VClip };

struct GridNode {
  Point2 pos;
  NodeRole role;
  bool boundary = false;
  double s_full = 0.0;  // meas of the full control volume (0 for clips)
  double s = 0.0;       // merged-grid weight, s_full / 2
};

struct Cell {
  int d_tail = -1, d_head = -1;  // merged node ids (D role)
  int v_tail = -1, v_head = -1;  // merged node ids (V roles)
  Point2 center;
  Point2 e1, e2;       // right-handed local frame, e1 along the V-diagonal
  double l_v = 0.0, l_d = 0.0;
  double area = 0.0;   // S* = l_d * l_v / 2
  bool boundary = false;
  int delaunay_edge = -1;
};

// Incidence of a node in a cell: sign +1 at the tail of its diagonal,
// -1 at the head; v_side distinguishes the V-diagonal from the D-diagonal.
struct CellUse {
  int cell;
  int sign;
  bool v_side;
};

struct ScalarGridFunction {
  std::vector<double> values;  // indexed by merged node id
};

struct VectorCellFunction {
  std::vector<double> v1, v2;  // local-frame components per cell
};

enum class Support { All, Interior };

class MvdGrid {
 public:
  std::vector<GridNode> nodes;
  std::vector<Cell> cells;
  std::vector<std::vector<CellUse>> node_cells;
  ConvexPolygon domain;
  int n_d_nodes = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int cell_count() const { return static_cast<int>(cells.size()); }

  bool is_d_node(int k) const { return nodes[k].role == NodeRole::D; }
  bool is_interior(int k) const { return !nodes[k].boundary; }

  double measure() const { return domain.area(); }

  double max_l_d() const {
    double h = 0.0;
    for (const Cell& c : cells) h = std::max(h, c.l_d);
    return h;
  }
};

struct AdmissibilityReport {
  double min_l_v = 0.0, max_l_v = 0.0;
  double min_l_d = 0.0, max_l_d = 0.0;
  double min_area = 0.0;
  int circumcenters_outside_cv = 0;   // V-nodes outside their own dual cell
  int dart_cells = 0;                 // center off the open V-segment
  double min_vnode_boundary_dist = 0.0;  // interior circumcenter nodes only
  bool all_vnodes_inside_cell = true;
};

namespace detail {

inline void cell_frame(Cell& c, const std::vector<GridNode>& nodes) {
  const Point2 dt = nodes[c.d_tail].pos;
  const Point2 dh = nodes[c.d_head].pos;
  const Point2 vt = nodes[c.v_tail].pos;
  const Point2 vh = nodes[c.v_head].pos;
  c.l_d = dist(dt, dh);
  c.l_v = dist(vt, vh);
  Point2 e2 = (1.0 / c.l_d) * (dh - dt);
  Point2 e1 = rot90cw(e2);
  if (dot(e1, vh - vt) < 0.0) {
    std::swap(c.d_tail, c.d_head);
    e2 = -e2;
    e1 = -e1;
  }
  c.e1 = e1;
  c.e2 = e2;
  c.area = 0.5 * c.l_d * c.l_v;
}

}  // namespace detail

/// Builds the merged grid from a Delaunay/Voronoi dual pair.
inline MvdGrid build_mvd(const Triangulation& tri, const VoronoiDiagram& vor,
                         const ConvexPolygon& domain) {
  MvdGrid g;
  g.domain = domain;
  const int np = static_cast<int>(tri.d_nodes.size());
  const int nv = static_cast<int>(vor.v_nodes.size());
  g.n_d_nodes = np;
  const double diam = domain.diameter();
  const double tol = kEpsGeom * diam;

  // merged nodes: D-nodes first, then Voronoi vertices
  g.nodes.resize(np + nv);
  for (int i = 0; i < np; ++i) {
    g.nodes[i].pos = tri.d_nodes[i];
    g.nodes[i].role = NodeRole::D;
    g.nodes[i].s_full = vor.cell_area[i];
    g.nodes[i].s = 0.5 * g.nodes[i].s_full;
  }
  for (const auto& [a, b] : tri.boundary_chain) {
    g.nodes[a].boundary = true;
    g.nodes[b].boundary = true;
  }
  for (int j = 0; j < nv; ++j) {
    GridNode& n = g.nodes[np + j];
    const VNode& v = vor.v_nodes[j];
    n.pos = v.pos;
    n.role = v.kind == VNodeKind::Circumcenter ? NodeRole::VCircum
                                               : NodeRole::VClip;
    n.boundary = v.on_boundary;
    if (v.kind == VNodeKind::Circumcenter) {
      double area = 0.0;
      for (int t : v.owned_triangles) area += tri.triangle_area(t);
      n.s_full = area;
    } else {
      n.s_full = 0.0;
    }
    n.s = 0.5 * n.s_full;
  }

  // one cell per Delaunay edge; degenerate interior duals are dropped
  for (int e = 0; e < static_cast<int>(tri.edges.size()); ++e) {
    const TriEdge& ed = tri.edges[e];
    const DualEdge& du = vor.dual[e];
    if (!ed.boundary() && du.degenerate) continue;

    if (vor.v_nodes[du.v1].outside_domain ||
        vor.v_nodes[du.v2].outside_domain)
      throw InadmissibleError(
          "inadmissible: Voronoi vertex outside the domain (cell of Delaunay "
          "edge " + std::to_string(e) + ")");

    Cell c;
    c.delaunay_edge = e;
    c.d_tail = ed.a;
    c.d_head = ed.b;
    c.v_tail = np + du.v1;
    c.v_head = np + du.v2;
    c.boundary = ed.boundary();

    // Delaunay consistency: the dual edge must run from t_left's side
    // across the D-edge. (a, b) is ccw in t_left, so rot90cw(b - a)
    // points out of t_left.
    const Point2 a = tri.d_nodes[ed.a];
    const Point2 b = tri.d_nodes[ed.b];
    const Point2 outward = rot90cw(b - a);
    const double sep = dot(g.nodes[c.v_head].pos - g.nodes[c.v_tail].pos,
                           (1.0 / norm(outward)) * outward);
    if (c.boundary) {
      if (sep <= tol)
        throw InadmissibleError(
            "inadmissible: degenerate boundary cell (circumcenter on the "
            "boundary edge), Delaunay edge " + std::to_string(e));
    } else if (sep <= tol) {
      throw InadmissibleError(
          "inadmissible: cell " + std::to_string(g.cells.size()) +
          " diagonals do not intersect (Delaunay edge " + std::to_string(e) +
          ")");
    }

    detail::cell_frame(c, g.nodes);

    if (c.boundary) {
      c.center = g.nodes[c.v_head].pos;
    } else {
      // diagonal lines cross at the D-edge midpoint; solve on the lines
      const Point2 vt = g.nodes[c.v_tail].pos;
      const Point2 d1 = g.nodes[c.v_head].pos - vt;
      const Point2 dt = g.nodes[c.d_tail].pos;
      const Point2 d2 = g.nodes[c.d_head].pos - dt;
      const double den = cross(d1, d2);
      if (std::abs(den) <= 0.0)
        throw InadmissibleError("inadmissible: parallel diagonals, cell " +
                                std::to_string(g.cells.size()));
      const double t = cross(dt - vt, d2) / den;
      c.center = vt + t * d1;
      const double u = dot(c.center - dt, d2) / norm2(d2);
      if (u <= kEpsGeom || u >= 1.0 - kEpsGeom)
        throw InadmissibleError(
            "inadmissible: cell center off the open D-diagonal, cell " +
            std::to_string(g.cells.size()));
    }
    g.cells.push_back(c);
  }

  // incidence lists
  g.node_cells.assign(g.nodes.size(), {});
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    g.node_cells[c.v_tail].push_back({m, +1, true});
    g.node_cells[c.v_head].push_back({m, -1, true});
    g.node_cells[c.d_tail].push_back({m, +1, false});
    g.node_cells[c.d_head].push_back({m, -1, false});
  }

  // bookkeeping identities
  const double meas = domain.area();
  double sum_sd = 0.0, sum_sv = 0.0, sum_star = 0.0, sum_s = 0.0;
  for (const GridNode& n : g.nodes) {
    if (n.role == NodeRole::D) sum_sd += n.s_full;
    else sum_sv += n.s_full;
    sum_s += n.s;
  }
  for (const Cell& c : g.cells) sum_star += c.area;
  const auto check = [&](double v, const char* what) {
    if (std::abs(v - meas) > 1e-10 * meas)
      throw InadmissibleError(std::string("inadmissible: ") + what +
                              " = " + std::to_string(v) +
                              " does not match meas(domain) = " +
                              std::to_string(meas));
  };
  check(sum_sd, "sum of D control volumes");
  check(sum_sv, "sum of V control volumes");
  check(sum_star, "sum of cell areas");
  check(sum_s, "sum of merged node weights");

  return g;
}

/// Boundary loop of the control volume of a node, reconstructed from the
/// cell incidences: D-edges around a V-node, V-edges (plus the boundary
/// closure through the node itself) around a D-node.
inline std::vector<Point2> control_volume_polygon(const MvdGrid& g, int k) {
  const GridNode& n = g.nodes[k];
  if (n.role == NodeRole::VClip)
    throw InadmissibleError("degenerate control volume at a boundary clip node");

  // directed pieces tail -> head in ccw order around the node
  std::map<int, std::pair<int, int>> next;  // tail node -> (head node, cell)
  for (const CellUse& use : g.node_cells[k]) {
    const Cell& c = g.cells[use.cell];
    if (n.role == NodeRole::VCircum) {
      if (!use.v_side) continue;
      // sigma * e2 is the ccw tangent around a V-node
      const int t = use.sign > 0 ? c.d_tail : c.d_head;
      const int h = use.sign > 0 ? c.d_head : c.d_tail;
      next[t] = {h, use.cell};
    } else {
      if (use.v_side) continue;
      // -sigma * e1 is the ccw tangent around a D-node
      const int t = use.sign > 0 ? c.v_head : c.v_tail;
      const int h = use.sign > 0 ? c.v_tail : c.v_head;
      next[t] = {h, use.cell};
    }
  }
  if (next.empty())
    throw InadmissibleError("control volume of node " + std::to_string(k) +
                            " has no boundary pieces");

  // closed cycles start at the lowest tail; open chains (boundary D-nodes)
  // must start at the tail that is nobody's head
  int start = next.begin()->first;
  {
    std::map<int, int> indeg;
    for (const auto& [t, hp] : next) indeg[hp.first] += 1;
    for (const auto& [t, hp] : next)
      if (indeg.find(t) == indeg.end()) { start = t; break; }
  }

  std::vector<Point2> loop;
  int cur = start;
  for (std::size_t guard = 0; guard <= next.size(); ++guard) {
    loop.push_back(g.nodes[cur].pos);
    auto it = next.find(cur);
    if (it == next.end()) {
      // open chain: a boundary D-node; close through the node itself
      if (n.role != NodeRole::D || !n.boundary)
        throw InadmissibleError("control volume of node " + std::to_string(k) +
                                " does not close");
      loop.push_back(n.pos);
      return loop;
    }
    cur = it->second.first;
    if (cur == start) return loop;
  }
  throw InadmissibleError("control volume of node " + std::to_string(k) +
                          " does not close");
}

inline AdmissibilityReport admissibility_report(const MvdGrid& g) {
  AdmissibilityReport rep;
  rep.min_l_v = rep.min_l_d = rep.min_area =
      std::numeric_limits<double>::infinity();
  rep.min_vnode_boundary_dist = std::numeric_limits<double>::infinity();

  for (const Cell& c : g.cells) {
    rep.min_l_v = std::min(rep.min_l_v, c.l_v);
    rep.max_l_v = std::max(rep.max_l_v, c.l_v);
    rep.min_l_d = std::min(rep.min_l_d, c.l_d);
    rep.max_l_d = std::max(rep.max_l_d, c.l_d);
    rep.min_area = std::min(rep.min_area, c.area);
    if (!c.boundary) {
      // center between the V-endpoints along e1?
      const double t = dot(c.center - g.nodes[c.v_tail].pos, c.e1);
      if (t <= 0.0 || t >= c.l_v) ++rep.dart_cells;
    }
  }

  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    if (n.role != NodeRole::VCircum) continue;
    const std::vector<Point2> cv = control_volume_polygon(g, k);
    bool inside = true;
    const std::size_t sz = cv.size();
    for (std::size_t i = 0; i < sz && inside; ++i)
      if (orient2d_sign(cv[i], cv[(i + 1) % sz], n.pos) < 0) inside = false;
    if (!inside) {
      ++rep.circumcenters_outside_cv;
      rep.all_vnodes_inside_cell = false;
    }
    if (!n.boundary)
      rep.min_vnode_boundary_dist =
          std::min(rep.min_vnode_boundary_dist, -g.domain.signed_distance(n.pos));
  }
  return rep;
}

/// (y, z) = sum over nodes of y z S.
inline double inner_omega(const ScalarGridFunction& y,
                          const ScalarGridFunction& z, const MvdGrid& g,
                          Support support = Support::All) {
  if (y.values.size() != g.nodes.size() || z.values.size() != g.nodes.size())
    throw std::invalid_argument("inner_omega: mismatched support");
  double acc = 0.0;
  for (int k = 0; k < g.node_count(); ++k) {
    if (support == Support::Interior && g.nodes[k].boundary) continue;
    acc += y.values[k] * z.values[k] * g.nodes[k].s;
  }
  return acc;
}

inline double norm_omega(const ScalarGridFunction& y, const MvdGrid& g,
                         Support support = Support::All) {
  return std::sqrt(inner_omega(y, y, g, support));
}

/// (u, v)_* = sum over cells of S* (u1 v1 + u2 v2).
inline double inner_cells(const VectorCellFunction& u,
                          const VectorCellFunction& v, const MvdGrid& g) {
  if (u.v1.size() != g.cells.size() || v.v1.size() != g.cells.size())
    throw std::invalid_argument("inner_cells: mismatched support");
  double acc = 0.0;
  for (int m = 0; m < g.cell_count(); ++m)
    acc += g.cells[m].area * (u.v1[m] * v.v1[m] + u.v2[m] * v.v2[m]);
  return acc;
}

inline double norm_cells(const VectorCellFunction& u, const MvdGrid& g) {
  return std::sqrt(inner_cells(u, u, g));
}

template <typename F>
ScalarGridFunction sample_scalar(F&& f, const MvdGrid& g) {
  ScalarGridFunction y;
  y.values.resize(g.nodes.size());
  for (int k = 0; k < g.node_count(); ++k) {
    y.values[k] = f(g.nodes[k].pos);
    if (!std::isfinite(y.values[k]))
      throw std::invalid_argument(
          "sample_scalar: non-finite sample at node " + std::to_string(k) +
          " (" + std::to_string(g.nodes[k].pos.x) + ", " +
          std::to_string(g.nodes[k].pos.y) + ")");
  }
  return y;
}

/// Samples a global-frame field at cell centers and rotates into each
/// cell's local frame.
template <typename F>
VectorCellFunction sample_vector(F&& field, const MvdGrid& g) {
  VectorCellFunction v;
  v.v1.resize(g.cells.size());
  v.v2.resize(g.cells.size());
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    const Point2 f = field(c.center);
    if (!finite(f))
      throw std::invalid_argument("sample_vector: non-finite sample at cell " +
                                  std::to_string(m));
    v.v1[m] = dot(f, c.e1);
    v.v2[m] = dot(f, c.e2);
  }
  return v;
}

/// Local-frame components of cell m back in the global frame.
inline Point2 to_global(const MvdGrid& g, const VectorCellFunction& v, int m) {
  const Cell& c = g.cells[m];
  return v.v1[m] * c.e1 + v.v2[m] * c.e2;
}

}  // namespace mvd

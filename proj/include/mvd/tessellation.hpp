#pragma once

// Delaunay triangulation (Bowyer-Watson, deterministic for a fixed input
// order) and its dual Voronoi diagram clipped to a convex domain.
//
// Cocircular ties classify as "on" and are excluded from insertion
// cavities, which resolves them deterministically by insertion order and
// triangle id. Dual Voronoi vertices of cocircular triangle fans merge
// into a single node, so the dual edge of an interior Delaunay edge may
// degenerate (both endpoints equal); downstream grid construction drops
// such cells.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mvd/geometry.hpp"

namespace mvd {

class InadmissibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triangle {
  std::array<int, 3> v;  // ccw node indices
};

// Undirected Delaunay edge; (a, b) is directed as it appears in the ccw
// order of triangle t_left. t_right == -1 for boundary edges.
struct TriEdge {
  int a = -1;
  int b = -1;
  int t_left = -1;
  int t_right = -1;
  bool boundary() const { return t_right < 0; }
};

struct Triangulation {
  std::vector<Point2> d_nodes;
  std::vector<Triangle> triangles;
  std::vector<std::array<int, 3>> neighbor;   // per triangle, across edge (v[i], v[i+1])
  std::vector<TriEdge> edges;                 // deterministic enumeration
  std::vector<std::array<int, 3>> tri_edge;   // triangle x local edge -> edge id
  std::vector<std::pair<int, int>> boundary_chain;  // ccw directed node pairs
  std::vector<int> boundary_edge_ids;         // aligned with boundary_chain
  ConvexPolygon domain;

  double triangle_area(int t) const {
    const Triangle& tr = triangles[t];
    return 0.5 * orient2d(d_nodes[tr.v[0]], d_nodes[tr.v[1]], d_nodes[tr.v[2]]);
  }
};

namespace detail {

// Strict "inside circumcircle" test used by the cavity search. Ties
// ("on", within kEpsGeom * scale^4) are excluded.
inline bool strictly_in_circle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad2 = adx * adx + ady * ady;
  const double bd2 = bdx * bdx + bdy * bdy;
  const double cd2 = cdx * cdx + cdy * cdy;
  const double det = adx * (bdy * cd2 - cdy * bd2) -
                     ady * (bdx * cd2 - cdx * bd2) +
                     ad2 * (bdx * cdy - cdx * bdy);
  const double s = coord_scale({a, b, c, d});
  return det > kEpsGeom * s * s * s * s;
}

inline std::uint64_t edge_key(int a, int b) {
  const std::uint64_t lo = static_cast<std::uint32_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint32_t>(std::max(a, b));
  return (hi << 32) | lo;
}

// Super-triangle vertices are treated as points at infinity in three
// fixed directions; conflict tests against triangles that use them are
// orientation/half-plane limits of the circumcircle test, which keeps
// all thresholds at the scale of the real data.
struct SuperDirections {
  Point2 dir[3];
};

inline SuperDirections super_directions() {
  const double s5 = std::sqrt(1.25);
  SuperDirections d;
  d.dir[0] = {-1.0 / s5, -0.5 / s5};
  d.dir[1] = {1.0 / s5, -0.5 / s5};
  d.dir[2] = {0.0, 1.0};
  return d;
}

// Conflict of point p with a (possibly infinite) triangle. n_real is the
// number of real input points; vertex ids >= n_real are super vertices.
inline bool bw_conflict(const std::array<int, 3>& v,
                        const std::vector<Point2>& pts, int n_real, Point2 p,
                        const SuperDirections& sd) {
  int nsup = 0;
  for (int k = 0; k < 3; ++k) nsup += v[k] >= n_real;
  if (nsup == 0)
    return strictly_in_circle(pts[v[0]], pts[v[1]], pts[v[2]], p);
  if (nsup == 3) return true;

  if (nsup == 1) {
    // rotate to (x, y, S): the circumcircle limit is the open half-plane
    // left of x -> y, plus the open segment (points between x and y lie
    // inside every circle through both)
    int k = 0;
    while (v[k] < n_real) ++k;
    const Point2 x = pts[v[(k + 1) % 3]];
    const Point2 y = pts[v[(k + 2) % 3]];
    const int side = orient2d_sign(x, y, p);
    if (side != 0) return side > 0;
    const double t = dot(p - x, y - x) / norm2(y - x);
    return t > kEpsGeom && t < 1.0 - kEpsGeom;
  }

  // nsup == 2: rotate to (a, S_i, S_j); the circumcircle limit is the
  // open half-plane through the real vertex a with normal d_i + d_j
  int k = 0;
  while (v[k] >= n_real) k = (k + 1) % 3;
  const Point2 a = pts[v[k]];
  const int si = v[(k + 1) % 3] - n_real;
  const int sj = v[(k + 2) % 3] - n_real;
  const Point2 u = sd.dir[si] + sd.dir[sj];
  const double s = dot(p - a, u);
  const double scale = std::max(1.0, coord_scale({p, a}));
  return s > kEpsGeom * scale;
}

}  // namespace detail

/// Bowyer-Watson Delaunay triangulation of `points` covering the convex
/// `domain`. Preconditions: all points in the closure of the domain, the
/// domain vertices among the points, no near-duplicate points.
inline Triangulation delaunay(const std::vector<Point2>& points,
                              const ConvexPolygon& domain) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw InadmissibleError("delaunay: need at least 3 points");
  for (const Point2& p : points)
    if (!finite(p)) throw InadmissibleError("delaunay: non-finite point");

  const double diam = domain.diameter();
  const double tol_in = kEpsGeom * diam;

  // containment and domain-vertex preconditions
  for (int i = 0; i < n; ++i)
    if (domain.signed_distance(points[i]) > tol_in)
      throw InadmissibleError("delaunay: point " + std::to_string(i) +
                              " lies outside the domain");
  for (std::size_t k = 0; k < domain.vertices().size(); ++k) {
    bool found = false;
    for (const Point2& p : points)
      if (dist(p, domain.vertices()[k]) <= tol_in) { found = true; break; }
    if (!found)
      throw InadmissibleError("delaunay: domain vertex " + std::to_string(k) +
                              " is not in the point set");
  }

  // near-duplicate scan (sweep over x-sorted order)
  {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return points[i].x < points[j].x;
    });
    std::string dups;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (points[order[j]].x - points[order[i]].x > tol_in) break;
        if (dist(points[order[i]], points[order[j]]) <= tol_in) {
          dups += (dups.empty() ? "" : ", ");
          dups += "(" + std::to_string(std::min(order[i], order[j])) + "," +
                  std::to_string(std::max(order[i], order[j])) + ")";
        }
      }
    }
    if (!dups.empty())
      throw InadmissibleError("delaunay: duplicate points at indices " + dups);
  }

  // working points: inputs plus a finite super-triangle, large enough that
  // its vertices stay outside every circumcircle the real points can form
  std::vector<Point2> pts = points;
  Point2 lo{points[0]}, hi{points[0]};
  for (const Point2& p : points) {
    lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
  }
  const Point2 mid = 0.5 * (lo + hi);
  const double m = 512.0 * std::max(diam, 1e-30);
  pts.push_back({mid.x - m, mid.y - 0.5 * m});
  pts.push_back({mid.x + m, mid.y - 0.5 * m});
  pts.push_back({mid.x, mid.y + m});

  struct WorkTri {
    std::array<int, 3> v;
    bool alive = true;
  };
  std::vector<WorkTri> tris;
  tris.push_back({{n, n + 1, n + 2}, true});
  const detail::SuperDirections sd = detail::super_directions();

  std::vector<int> cavity;
  std::vector<std::pair<int, int>> cavity_edges;
  for (int p = 0; p < n; ++p) {
    cavity.clear();
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      if (detail::bw_conflict(tris[t].v, pts, n, pts[p], sd))
        cavity.push_back(t);
    }
    if (cavity.empty())
      throw InadmissibleError("delaunay: insertion failed for point " +
                              std::to_string(p));

    cavity_edges.clear();
    for (int t : cavity) {
      const auto& v = tris[t].v;
      cavity_edges.emplace_back(v[0], v[1]);
      cavity_edges.emplace_back(v[1], v[2]);
      cavity_edges.emplace_back(v[2], v[0]);
      tris[t].alive = false;
    }
    // boundary = directed edges whose reverse is absent from the cavity
    for (const auto& [u, w] : cavity_edges) {
      bool interior = false;
      for (const auto& [x, y] : cavity_edges)
        if (x == w && y == u) { interior = true; break; }
      if (interior) continue;
      if (u < n && w < n &&
          orient2d_sign(pts[u], pts[w], pts[p]) <= 0)
        throw InadmissibleError("delaunay: degenerate insertion of point " +
                                std::to_string(p));
      tris.push_back({{u, w, p}, true});
    }
  }

  Triangulation out;
  out.d_nodes = points;
  out.domain = domain;
  for (const WorkTri& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.triangles.push_back({t.v});
  }
  if (out.triangles.empty())
    throw InadmissibleError("delaunay: all points collinear");

  // adjacency, edge enumeration, boundary chain
  const int nt = static_cast<int>(out.triangles.size());
  out.neighbor.assign(nt, {-1, -1, -1});
  out.tri_edge.assign(nt, {-1, -1, -1});
  std::unordered_map<std::uint64_t, int> edge_of;
  edge_of.reserve(static_cast<std::size_t>(nt) * 2);
  for (int t = 0; t < nt; ++t) {
    const auto& v = out.triangles[t].v;
    for (int e = 0; e < 3; ++e) {
      const int a = v[e];
      const int b = v[(e + 1) % 3];
      const std::uint64_t key = detail::edge_key(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        TriEdge ed;
        ed.a = a;
        ed.b = b;
        ed.t_left = t;
        out.edges.push_back(ed);
        const int id = static_cast<int>(out.edges.size()) - 1;
        edge_of.emplace(key, id);
        out.tri_edge[t][e] = id;
      } else {
        TriEdge& ed = out.edges[it->second];
        if (ed.t_right != -1)
          throw InadmissibleError("delaunay: non-manifold edge");
        ed.t_right = t;
        out.tri_edge[t][e] = it->second;
        // neighbor links
        const auto& lv = out.triangles[ed.t_left].v;
        for (int le = 0; le < 3; ++le)
          if (detail::edge_key(lv[le], lv[(le + 1) % 3]) == key)
            out.neighbor[ed.t_left][le] = t;
        out.neighbor[t][e] = ed.t_left;
      }
    }
  }

  // union of triangles must cover the domain
  double tri_area = 0.0;
  for (int t = 0; t < nt; ++t) {
    const double a = out.triangle_area(t);
    if (a <= 0.0)
      throw InadmissibleError("delaunay: non-ccw triangle " + std::to_string(t));
    tri_area += a;
  }
  const double dom_area = domain.area();
  if (std::abs(tri_area - dom_area) > 1e-10 * dom_area)
    throw InadmissibleError("delaunay: triangulated area " +
                            std::to_string(tri_area) +
                            " does not match domain area " +
                            std::to_string(dom_area));

  // boundary chain: directed boundary edges, linked tail -> head
  std::map<int, int> next_of;  // tail node -> edge id
  int chain_start = -1;
  int n_bedges = 0;
  for (int e = 0; e < static_cast<int>(out.edges.size()); ++e) {
    if (!out.edges[e].boundary()) continue;
    ++n_bedges;
    if (next_of.count(out.edges[e].a))
      throw InadmissibleError("delaunay: boundary is not a simple cycle");
    next_of[out.edges[e].a] = e;
    if (chain_start < 0 || out.edges[e].a < chain_start)
      chain_start = out.edges[e].a;
  }
  if (n_bedges < 3) throw InadmissibleError("delaunay: boundary too small");
  int node = chain_start;
  for (int k = 0; k < n_bedges; ++k) {
    auto it = next_of.find(node);
    if (it == next_of.end())
      throw InadmissibleError("delaunay: boundary chain does not close");
    const TriEdge& ed = out.edges[it->second];
    out.boundary_chain.emplace_back(ed.a, ed.b);
    out.boundary_edge_ids.push_back(it->second);
    node = ed.b;
  }
  if (node != chain_start)
    throw InadmissibleError("delaunay: boundary chain does not close");
  for (const auto& [a, b] : out.boundary_chain) {
    if (domain.signed_distance(points[a]) < -tol_in ||
        domain.signed_distance(points[b]) < -tol_in)
      throw InadmissibleError("delaunay: boundary edge not on the domain boundary");
  }

  return out;
}

struct DelaunayViolation {
  int triangle;
  int point;
};

struct DelaunayReport {
  std::vector<DelaunayViolation> violations;
  double min_angle_deg = 0.0;
  double max_angle_deg = 0.0;
  double min_edge_length = 0.0;
};

/// Brute-force empty-circumcircle validation plus angle/edge statistics.
inline DelaunayReport check_delaunay(const Triangulation& tri) {
  DelaunayReport rep;
  rep.min_angle_deg = 180.0;
  rep.max_angle_deg = 0.0;
  rep.min_edge_length = std::numeric_limits<double>::infinity();

  const int nt = static_cast<int>(tri.triangles.size());
  const int np = static_cast<int>(tri.d_nodes.size());
  for (int t = 0; t < nt; ++t) {
    const auto& v = tri.triangles[t].v;
    const Point2 a = tri.d_nodes[v[0]];
    const Point2 b = tri.d_nodes[v[1]];
    const Point2 c = tri.d_nodes[v[2]];
    for (int p = 0; p < np; ++p) {
      if (p == v[0] || p == v[1] || p == v[2]) continue;
      if (detail::strictly_in_circle(a, b, c, tri.d_nodes[p]))
        rep.violations.push_back({t, p});
    }
    const Point2 pt[3] = {a, b, c};
    for (int k = 0; k < 3; ++k) {
      const Point2 u = pt[(k + 1) % 3] - pt[k];
      const Point2 w = pt[(k + 2) % 3] - pt[k];
      const double ang =
          std::atan2(std::abs(cross(u, w)), dot(u, w)) * 180.0 / M_PI;
      rep.min_angle_deg = std::min(rep.min_angle_deg, ang);
      rep.max_angle_deg = std::max(rep.max_angle_deg, ang);
      rep.min_edge_length = std::min(rep.min_edge_length, norm(u));
    }
  }
  return rep;
}

enum class VNodeKind { Circumcenter, BoundaryClip };

struct VNode {
  Point2 pos;
  VNodeKind kind;
  int owner;  // first owning triangle id, or boundary edge id for clips
  std::vector<int> owned_triangles;  // circumcenter nodes: merged owners
  bool on_boundary = false;
  // Strictly outside the domain. The diagram itself is still well defined
  // (cells are clipped); grid construction rejects such vertices.
  bool outside_domain = false;
};

// Dual Voronoi edge of a Delaunay edge. For interior Delaunay edges whose
// adjacent circumcenters merged (cocircular), degenerate is true.
struct DualEdge {
  int v1 = -1;
  int v2 = -1;
  bool degenerate = false;
};

struct VoronoiDiagram {
  std::vector<VNode> v_nodes;
  std::vector<int> tri_vnode;    // triangle -> merged v-node id
  std::vector<DualEdge> dual;    // per Triangulation edge id
  std::vector<ConvexPolygon> cells;  // per D-node, clipped to the domain
  std::vector<double> cell_area;

  int n_circumcenter_nodes = 0;
};

/// Dual Voronoi diagram: per-node cells built by half-plane intersection
/// toward all Delaunay neighbors, clipped to the domain; dual edges of
/// boundary Delaunay edges end at the boundary edge midpoint.
inline VoronoiDiagram voronoi(const Triangulation& tri,
                              const ConvexPolygon& domain) {
  VoronoiDiagram out;
  const int nt = static_cast<int>(tri.triangles.size());
  const int np = static_cast<int>(tri.d_nodes.size());
  const double diam = domain.diameter();
  const double merge_r = kEpsGeom * diam;

  // circumcenters, deduplicated with the merge radius
  out.tri_vnode.assign(nt, -1);
  for (int t = 0; t < nt; ++t) {
    const auto& v = tri.triangles[t].v;
    const Point2 cc =
        circumcenter(tri.d_nodes[v[0]], tri.d_nodes[v[1]], tri.d_nodes[v[2]]);
    int id = -1;
    for (int j = 0; j < static_cast<int>(out.v_nodes.size()); ++j) {
      if (dist(out.v_nodes[j].pos, cc) <= merge_r) { id = j; break; }
    }
    if (id < 0) {
      VNode node;
      node.pos = cc;
      node.kind = VNodeKind::Circumcenter;
      node.owner = t;
      const double sd = domain.signed_distance(cc);
      node.on_boundary = std::abs(sd) <= merge_r;
      node.outside_domain = sd > merge_r;
      out.v_nodes.push_back(std::move(node));
      id = static_cast<int>(out.v_nodes.size()) - 1;
    }
    out.v_nodes[id].owned_triangles.push_back(t);
    out.tri_vnode[t] = id;
  }
  out.n_circumcenter_nodes = static_cast<int>(out.v_nodes.size());

  // boundary clip nodes: midpoints of boundary Delaunay edges, in chain order
  std::vector<int> clip_of_edge(tri.edges.size(), -1);
  for (std::size_t k = 0; k < tri.boundary_edge_ids.size(); ++k) {
    const int e = tri.boundary_edge_ids[k];
    const TriEdge& ed = tri.edges[e];
    VNode node;
    node.pos = 0.5 * (tri.d_nodes[ed.a] + tri.d_nodes[ed.b]);
    node.kind = VNodeKind::BoundaryClip;
    node.owner = e;
    node.on_boundary = true;
    out.v_nodes.push_back(std::move(node));
    clip_of_edge[e] = static_cast<int>(out.v_nodes.size()) - 1;
  }

  // dual edges
  out.dual.resize(tri.edges.size());
  for (int e = 0; e < static_cast<int>(tri.edges.size()); ++e) {
    const TriEdge& ed = tri.edges[e];
    DualEdge d;
    if (ed.boundary()) {
      d.v1 = out.tri_vnode[ed.t_left];
      d.v2 = clip_of_edge[e];
    } else {
      d.v1 = out.tri_vnode[ed.t_left];
      d.v2 = out.tri_vnode[ed.t_right];
      d.degenerate = (d.v1 == d.v2);
    }
    out.dual[e] = d;
  }

  // clipped Voronoi cells by half-plane intersection toward all neighbors
  std::vector<std::vector<int>> nbrs(np);
  for (const TriEdge& ed : tri.edges) {
    nbrs[ed.a].push_back(ed.b);
    nbrs[ed.b].push_back(ed.a);
  }
  out.cells.resize(np);
  out.cell_area.resize(np);
  for (int i = 0; i < np; ++i) {
    std::sort(nbrs[i].begin(), nbrs[i].end());
    const Point2 p = tri.d_nodes[i];
    std::optional<ConvexPolygon> cell = domain;
    for (int q : nbrs[i]) {
      const Point2 qp = tri.d_nodes[q];
      const Point2 nrm = qp - p;
      const double off = 0.5 * (norm2(qp) - norm2(p));
      cell = clip_convex(*cell, {nrm, off});
      if (!cell)
        throw InadmissibleError("voronoi: empty cell for node " +
                                std::to_string(i));
    }
    out.cell_area[i] = cell->area();
    out.cells[i] = std::move(*cell);
  }

  return out;
}

}  // namespace mvd

#pragma once

// Grid operators of vector analysis on the MVD grid: gradient and scalar
// rotor (node scalars -> cell vectors), divergence and vector rotor (cell
// vectors -> node scalars), plus contour-quadrature oracles for testing.
//
// Sign conventions hinge on one fact: with the right-handed cell frame
// (e1 along the V-diagonal v_tail->v_head, e2 along the D-diagonal),
// sigma * e1 is the outward normal of the V-node control volume at the
// cell's D-edge and sigma * e2 is its ccw tangent; around a D-node the
// outward normal is sigma * e2 and the ccw tangent is -sigma * e1, where
// sigma is +1 at the tail of the respective diagonal and -1 at the head.
// All discrete complexes and duality identities follow by telescoping.

#include "mvd/grid.hpp"
#include "mvd/sparse.hpp"

namespace mvd {

/// +1 when the node is the tail of its diagonal in the cell, -1 at the head.
inline int orientation_sign(const MvdGrid& g, int cell, int node) {
  const Cell& c = g.cells[cell];
  if (node == c.v_tail || node == c.d_tail) return +1;
  if (node == c.v_head || node == c.d_head) return -1;
  throw std::invalid_argument("orientation_sign: node is not a cell endpoint");
}

/// View of the orientation convention over a whole grid.
class OrientationSign {
 public:
  explicit OrientationSign(const MvdGrid& g) : g_(&g) {}
  int operator()(int cell, int node) const {
    return orientation_sign(*g_, cell, node);
  }

 private:
  const MvdGrid* g_;
};

/// grad_h: per cell, v1 = (y(v_head) - y(v_tail)) / L_V along e1,
/// v2 = (y(d_head) - y(d_tail)) / L_D along e2.
inline VectorCellFunction grad_h(const MvdGrid& g, const ScalarGridFunction& y) {
  VectorCellFunction v;
  v.v1.resize(g.cells.size());
  v.v2.resize(g.cells.size());
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    v.v1[m] = (y.values[c.v_head] - y.values[c.v_tail]) / c.l_v;
    v.v2[m] = (y.values[c.d_head] - y.values[c.d_tail]) / c.l_d;
  }
  return v;
}

/// rot2D_h (scalar -> vector): the pointwise -90 degree rotation of
/// grad_h in the local frame.
inline VectorCellFunction rot2d_scalar_h(const MvdGrid& g,
                                         const ScalarGridFunction& y) {
  VectorCellFunction v;
  v.v1.resize(g.cells.size());
  v.v2.resize(g.cells.size());
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    v.v1[m] = (y.values[c.d_head] - y.values[c.d_tail]) / c.l_d;
    v.v2[m] = -(y.values[c.v_head] - y.values[c.v_tail]) / c.l_v;
  }
  return v;
}

namespace detail {

inline void require_divergence_node(const MvdGrid& g, int k) {
  if (g.nodes[k].role == NodeRole::VClip)
    throw std::invalid_argument(
        "divergence undefined at degenerate control volume (boundary clip "
        "node " + std::to_string(k) + ")");
}

}  // namespace detail

/// Raw flux sum at a node: sum over incident cells of sigma * v_n * L,
/// with v_n = v1 (L = L_D) at V-nodes and v_n = v2 (L = L_V) at D-nodes.
/// Boundary-D contour pieces on the domain boundary contribute zero,
/// matching the homogeneous normal boundary condition.
inline double flux_sum(const MvdGrid& g, const VectorCellFunction& v, int k) {
  detail::require_divergence_node(g, k);
  const bool at_vnode = g.nodes[k].role == NodeRole::VCircum;
  double acc = 0.0;
  for (const CellUse& use : g.node_cells[k]) {
    if (use.v_side != at_vnode) continue;
    const Cell& c = g.cells[use.cell];
    if (at_vnode)
      acc += use.sign * v.v1[use.cell] * c.l_d;
    else
      acc += use.sign * v.v2[use.cell] * c.l_v;
  }
  return acc;
}

/// Raw circulation sum at a node (ccw): sigma * v2 * L_D at V-nodes,
/// -sigma * v1 * L_V at D-nodes. Boundary-D pieces on the domain boundary
/// contribute zero (homogeneous tangential condition).
inline double circulation_sum(const MvdGrid& g, const VectorCellFunction& v,
                              int k) {
  detail::require_divergence_node(g, k);
  const bool at_vnode = g.nodes[k].role == NodeRole::VCircum;
  double acc = 0.0;
  for (const CellUse& use : g.node_cells[k]) {
    if (use.v_side != at_vnode) continue;
    const Cell& c = g.cells[use.cell];
    if (at_vnode)
      acc += use.sign * v.v2[use.cell] * c.l_d;
    else
      acc += -use.sign * v.v1[use.cell] * c.l_v;
  }
  return acc;
}

/// div_h at one node: flux sum over the full control-volume measure.
inline double div_h_at(const MvdGrid& g, const VectorCellFunction& v, int k) {
  return flux_sum(g, v, k) / g.nodes[k].s_full;
}

/// rot2**D**_h at one node: ccw circulation over the full measure.
inline double rot2d_vector_h_at(const MvdGrid& g, const VectorCellFunction& v,
                                int k) {
  return circulation_sum(g, v, k) / g.nodes[k].s_full;
}

enum class ContourKind { Flux, Circulation };

/// One-point-per-edge contour quadrature of a piecewise-constant field
/// sampled at cell centers: the bit-exact twin of the discrete operators.
template <typename F>
double onepoint_contour(const MvdGrid& g, F&& field, int k, ContourKind kind) {
  detail::require_divergence_node(g, k);
  const bool at_vnode = g.nodes[k].role == NodeRole::VCircum;
  double acc = 0.0;
  for (const CellUse& use : g.node_cells[k]) {
    if (use.v_side != at_vnode) continue;
    const Cell& c = g.cells[use.cell];
    const Point2 f = field(c.center);
    if (kind == ContourKind::Flux) {
      if (at_vnode)
        acc += use.sign * dot(f, c.e1) * c.l_d;
      else
        acc += use.sign * dot(f, c.e2) * c.l_v;
    } else {
      if (at_vnode)
        acc += use.sign * dot(f, c.e2) * c.l_d;
      else
        acc += -use.sign * dot(f, c.e1) * c.l_v;
    }
  }
  return acc / g.nodes[k].s_full;
}

/// Sparse form of grad_h: rows 2m, 2m+1 hold the local components of
/// cell m against the node values. rot2d_scalar_h is the rotated pair of
/// the same rows. The matrix and matrix-free paths cross-validate.
inline SparseOperator gradient_matrix(const MvdGrid& g) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(g.cell_count()) * 4);
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    t.push_back({2 * m, c.v_head, 1.0 / c.l_v});
    t.push_back({2 * m, c.v_tail, -1.0 / c.l_v});
    t.push_back({2 * m + 1, c.d_head, 1.0 / c.l_d});
    t.push_back({2 * m + 1, c.d_tail, -1.0 / c.l_d});
  }
  return SparseOperator::from_triplets(2 * g.cell_count(), g.node_count(),
                                       std::move(t));
}

inline SparseOperator rot_scalar_matrix(const MvdGrid& g) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(g.cell_count()) * 4);
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    t.push_back({2 * m, c.d_head, 1.0 / c.l_d});
    t.push_back({2 * m, c.d_tail, -1.0 / c.l_d});
    t.push_back({2 * m + 1, c.v_head, -1.0 / c.l_v});
    t.push_back({2 * m + 1, c.v_tail, 1.0 / c.l_v});
  }
  return SparseOperator::from_triplets(2 * g.cell_count(), g.node_count(),
                                       std::move(t));
}

/// Transposable flux forms: node-by-cell-component matrices applying
/// div_h / rot2D*_h to stacked (v1, v2) cell vectors. Rows of boundary
/// clip nodes are empty (the divergence is undefined there); boundary
/// D-node rows carry only the suppressed-boundary stencil.
inline SparseOperator divergence_matrix(const MvdGrid& g) {
  std::vector<Triplet> t;
  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    if (n.role == NodeRole::VClip) continue;
    const bool at_vnode = n.role == NodeRole::VCircum;
    for (const CellUse& use : g.node_cells[k]) {
      if (use.v_side != at_vnode) continue;
      const Cell& c = g.cells[use.cell];
      if (at_vnode)
        t.push_back({k, 2 * use.cell, use.sign * c.l_d / n.s_full});
      else
        t.push_back({k, 2 * use.cell + 1, use.sign * c.l_v / n.s_full});
    }
  }
  return SparseOperator::from_triplets(g.node_count(), 2 * g.cell_count(),
                                       std::move(t));
}

inline SparseOperator rot_vector_matrix(const MvdGrid& g) {
  std::vector<Triplet> t;
  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    if (n.role == NodeRole::VClip) continue;
    const bool at_vnode = n.role == NodeRole::VCircum;
    for (const CellUse& use : g.node_cells[k]) {
      if (use.v_side != at_vnode) continue;
      const Cell& c = g.cells[use.cell];
      if (at_vnode)
        t.push_back({k, 2 * use.cell + 1, use.sign * c.l_d / n.s_full});
      else
        t.push_back({k, 2 * use.cell, -use.sign * c.l_v / n.s_full});
    }
  }
  return SparseOperator::from_triplets(g.node_count(), 2 * g.cell_count(),
                                       std::move(t));
}

/// High-order contour integral (composite 8-point Gauss per edge) of
/// F . n dl or F . tau dl over the control volume boundary, divided by
/// the control-volume measure. Ground truth for consistency tests.
template <typename F>
double contour_oracle(const MvdGrid& g, F&& field, int k, ContourKind kind) {
  static const double gx[8] = {
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
      -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
      0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
      0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
      0.2223810344533745, 0.1012285362903763};

  const std::vector<Point2> loop = control_volume_polygon(g, k);
  const std::size_t n = loop.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = loop[i];
    const Point2 b = loop[(i + 1) % n];
    const Point2 t = b - a;
    const double len = norm(t);
    if (len == 0.0) continue;
    const Point2 tau = (1.0 / len) * t;
    const Point2 nrm = rot90cw(tau);  // outward for a ccw loop
    for (int q = 0; q < 8; ++q) {
      const Point2 x = a + (0.5 * (gx[q] + 1.0)) * t;
      const Point2 f = field(x);
      const double comp = kind == ContourKind::Flux ? dot(f, nrm) : dot(f, tau);
      acc += 0.5 * len * gw[q] * comp;
    }
  }
  return acc / g.nodes[k].s_full;
}

}  // namespace mvd

#pragma once

// Assembly and solution of the four operator-difference boundary value
// problems: diffusion (-div k grad + c), grad-div, and the two rot-rot
// reductions. Systems are stored as the symmetric bilinear-form matrix B
// plus the per-dof weight vector W; the operator equation A u = f with
// A = W^-1 B is recovered by weighting. Dirichlet/pinned dofs are
// eliminated, never penalized.
//
// Coefficient sampling: k at cell centers for the grad/rot-scalar forms,
// k at nodes for the div/rot-vector forms; c and f at the dof carrier.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvd/operators.hpp"
#include "mvd/sparse.hpp"

namespace mvd {

class CoefficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { Diffusion, GradDiv, RotRotScalar, RotRotVector };

inline bool is_scalar_problem(ProblemKind k) {
  return k == ProblemKind::Diffusion || k == ProblemKind::RotRotScalar;
}

inline const char* problem_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::Diffusion: return "diffusion";
    case ProblemKind::GradDiv: return "graddiv";
    case ProblemKind::RotRotScalar: return "rotrot-scalar";
    case ProblemKind::RotRotVector: return "rotrot-vector";
  }
  return "?";
}

struct CoefficientSet {
  std::function<double(Point2)> k;
  std::function<double(Point2)> c;
  std::function<double(Point2)> f;      // scalar problems
  std::function<Point2(Point2)> f_vec;  // vector problems
};

struct PinnedDof {
  int carrier;  // node id (scalar) or 2*cell+comp (vector)
  double value;
};

struct DofMap {
  std::vector<int> index;  // carrier -> dof or -1
  int n_dofs = 0;
  bool vector_valued = false;
};

struct DiscreteSystem {
  ProblemKind kind = ProblemKind::Diffusion;
  SparseOperator matrix;       // B, symmetric
  std::vector<double> weight;  // W per dof: S at nodes, S* at cells
  std::vector<double> rhs;     // W-weighted samples of f
  DofMap dof_map;
  std::vector<PinnedDof> pinned;
  double min_k_sample = 0.0;
  double min_c_sample = 0.0;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

namespace detail {

inline double positive_sample(const std::function<double(Point2)>& fn,
                              Point2 p, const char* which) {
  const double v = fn(p);
  if (!(v > 0.0))
    throw CoefficientError(std::string(which) + " violates its positive lower "
                           "bound at (" + std::to_string(p.x) + ", " +
                           std::to_string(p.y) + "): value " +
                           std::to_string(v));
  return v;
}

// Shared scalar-problem assembly: the grad and rot-scalar forms produce
// identical matrices because the rotor is a pointwise frame rotation.
inline DiscreteSystem assemble_scalar_form(const MvdGrid& g,
                                           const CoefficientSet& coeffs,
                                           ProblemKind kind) {
  DiscreteSystem sys;
  sys.kind = kind;
  DofMap& dm = sys.dof_map;
  dm.vector_valued = false;
  dm.index.assign(g.nodes.size(), -1);
  for (int k = 0; k < g.node_count(); ++k) {
    if (g.nodes[k].boundary)
      sys.pinned.push_back({k, 0.0});
    else
      dm.index[k] = dm.n_dofs++;
  }

  sys.min_k_sample = std::numeric_limits<double>::infinity();
  sys.min_c_sample = std::numeric_limits<double>::infinity();

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(g.cell_count()) * 8 + dm.n_dofs);
  const bool rot = kind == ProblemKind::RotRotScalar;
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    const double kv = positive_sample(coeffs.k, c.center, "k");
    sys.min_k_sample = std::min(sys.min_k_sample, kv);
    const double w = kv * c.area;
    // component pairs in formula order: grad = (V-pair, D-pair),
    // rot-scalar = (D-pair, V-pair); the quadratic forms coincide
    const int pairs[2][2] = {{c.v_tail, c.v_head}, {c.d_tail, c.d_head}};
    const double lens[2] = {c.l_v, c.l_d};
    for (int comp = 0; comp < 2; ++comp) {
      const int which = rot ? 1 - comp : comp;
      const int a = pairs[which][0];
      const int b = pairs[which][1];
      const double coef = w / (lens[which] * lens[which]);
      const int da = dm.index[a];
      const int db = dm.index[b];
      if (da >= 0) trips.push_back({da, da, coef});
      if (db >= 0) trips.push_back({db, db, coef});
      if (da >= 0 && db >= 0) {
        trips.push_back({da, db, -coef});
        trips.push_back({db, da, -coef});
      }
    }
  }

  sys.weight.assign(dm.n_dofs, 0.0);
  sys.rhs.assign(dm.n_dofs, 0.0);
  for (int k = 0; k < g.node_count(); ++k) {
    const int d = dm.index[k];
    if (d < 0) continue;
    const Point2 p = g.nodes[k].pos;
    const double cv = positive_sample(coeffs.c, p, "c");
    sys.min_c_sample = std::min(sys.min_c_sample, cv);
    const double s = g.nodes[k].s;
    trips.push_back({d, d, cv * s});
    sys.weight[d] = s;
    sys.rhs[d] = s * coeffs.f(p);
  }

  sys.matrix = SparseOperator::from_triplets(dm.n_dofs, dm.n_dofs,
                                             std::move(trips), true);
  return sys;
}

// Shared vector-problem assembly. GradDiv keeps the tangential (e2)
// component free at boundary cells and uses the flux sums; RotRotVector
// keeps the normal (e1) component free and uses the circulation sums.
inline DiscreteSystem assemble_vector_form(const MvdGrid& g,
                                           const CoefficientSet& coeffs,
                                           ProblemKind kind) {
  DiscreteSystem sys;
  sys.kind = kind;
  const bool rot = kind == ProblemKind::RotRotVector;
  DofMap& dm = sys.dof_map;
  dm.vector_valued = true;
  dm.index.assign(g.cells.size() * 2, -1);
  for (int m = 0; m < g.cell_count(); ++m) {
    const bool pin1 = g.cells[m].boundary && !rot;  // (u . n) = 0
    const bool pin2 = g.cells[m].boundary && rot;   // (u x n) = 0
    if (pin1) sys.pinned.push_back({2 * m, 0.0}); else dm.index[2 * m] = dm.n_dofs++;
    if (pin2) sys.pinned.push_back({2 * m + 1, 0.0}); else dm.index[2 * m + 1] = dm.n_dofs++;
  }

  sys.min_k_sample = std::numeric_limits<double>::infinity();
  sys.min_c_sample = std::numeric_limits<double>::infinity();

  std::vector<Triplet> trips;
  // node terms: sum_k S_k k(x_k) (op u)_k (op z)_k over interior nodes
  // and boundary D-nodes
  std::vector<std::pair<int, double>> row;
  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    if (n.role == NodeRole::VClip) continue;
    if (n.boundary && n.role != NodeRole::D) continue;
    const double kv = positive_sample(coeffs.k, n.pos, "k");
    sys.min_k_sample = std::min(sys.min_k_sample, kv);
    const double w = kv * n.s;  // halved merged weight
    const double inv_meas = 1.0 / n.s_full;

    row.clear();
    const bool at_vnode = n.role == NodeRole::VCircum;
    for (const CellUse& use : g.node_cells[k]) {
      if (use.v_side != at_vnode) continue;
      const Cell& c = g.cells[use.cell];
      int comp;
      double coef;
      if (!rot)  // divergence row
        { comp = at_vnode ? 0 : 1; coef = use.sign * (at_vnode ? c.l_d : c.l_v); }
      else       // circulation row
        { comp = at_vnode ? 1 : 0; coef = (at_vnode ? use.sign : -use.sign) *
                                          (at_vnode ? c.l_d : c.l_v); }
      const int dof = dm.index[2 * use.cell + comp];
      if (dof < 0) continue;  // pinned component, value 0
      row.emplace_back(dof, coef * inv_meas);
    }
    for (const auto& [di, ai] : row)
      for (const auto& [dj, aj] : row)
        trips.push_back({di, dj, w * ai * aj});
  }

  sys.weight.assign(dm.n_dofs, 0.0);
  sys.rhs.assign(dm.n_dofs, 0.0);
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    const double cv = positive_sample(coeffs.c, c.center, "c");
    sys.min_c_sample = std::min(sys.min_c_sample, cv);
    const Point2 f = coeffs.f_vec(c.center);
    const double fcomp[2] = {dot(f, c.e1), dot(f, c.e2)};
    for (int comp = 0; comp < 2; ++comp) {
      const int d = dm.index[2 * m + comp];
      if (d < 0) continue;
      trips.push_back({d, d, cv * c.area});
      sys.weight[d] = c.area;
      sys.rhs[d] = c.area * fcomp[comp];
    }
  }

  sys.matrix = SparseOperator::from_triplets(dm.n_dofs, dm.n_dofs,
                                             std::move(trips), true);
  return sys;
}

}  // namespace detail

inline DiscreteSystem assemble_diffusion(const MvdGrid& g,
                                         const CoefficientSet& coeffs) {
  return detail::assemble_scalar_form(g, coeffs, ProblemKind::Diffusion);
}

inline DiscreteSystem assemble_rotrot_scalar(const MvdGrid& g,
                                             const CoefficientSet& coeffs) {
  return detail::assemble_scalar_form(g, coeffs, ProblemKind::RotRotScalar);
}

inline DiscreteSystem assemble_graddiv(const MvdGrid& g,
                                       const CoefficientSet& coeffs) {
  return detail::assemble_vector_form(g, coeffs, ProblemKind::GradDiv);
}

inline DiscreteSystem assemble_rotrot_vector(const MvdGrid& g,
                                             const CoefficientSet& coeffs) {
  return detail::assemble_vector_form(g, coeffs, ProblemKind::RotRotVector);
}

inline DiscreteSystem assemble(const MvdGrid& g, const CoefficientSet& coeffs,
                               ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Diffusion: return assemble_diffusion(g, coeffs);
    case ProblemKind::GradDiv: return assemble_graddiv(g, coeffs);
    case ProblemKind::RotRotScalar: return assemble_rotrot_scalar(g, coeffs);
    case ProblemKind::RotRotVector: return assemble_rotrot_vector(g, coeffs);
  }
  throw std::invalid_argument("assemble: unknown problem kind");
}

/// Jacobi-preconditioned conjugate gradients on B u = rhs. Deterministic;
/// returns the recomputed true residual.
inline std::pair<std::vector<double>, SolveStats> cg_solve(
    const DiscreteSystem& sys, double tol, int maxit) {
  if (!(tol > 0.0)) throw std::invalid_argument("cg_solve: tol must be > 0");
  const SparseOperator& B = sys.matrix;
  const int n = B.n_rows;
  const std::vector<double> diag = B.diagonal();
  for (int i = 0; i < n; ++i)
    if (!(diag[i] > 0.0))
      throw std::invalid_argument(
          "cg_solve: matrix not positive definite (diagonal entry " +
          std::to_string(i) + " is " + std::to_string(diag[i]) + ")");

  std::vector<double> u(n, 0.0);
  SolveStats stats;
  const double rhs_norm = norm2_vec(sys.rhs);
  if (rhs_norm == 0.0) {
    stats.converged = true;
    return {u, stats};
  }

  std::vector<double> r = sys.rhs;  // r = rhs - B*0
  std::vector<double> z(n), p(n), bp(n);
  for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = dot(r, z);

  const auto true_residual = [&]() {
    B.apply(u, bp);
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = bp[i] - sys.rhs[i];
      res += d * d;
    }
    return std::sqrt(res) / rhs_norm;
  };

  // convergence is judged by the recomputed true residual; the recursion
  // residual only gates when to recompute
  double target = tol * rhs_norm;
  for (int it = 1; it <= maxit; ++it) {
    B.apply(p, bp);
    const double pbp = dot(p, bp);
    if (!(pbp > 0.0))
      throw std::invalid_argument("cg_solve: matrix not positive definite "
                                  "(nonpositive curvature)");
    const double alpha = rz / pbp;
    for (int i = 0; i < n; ++i) u[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * bp[i];
    stats.iterations = it;
    if (norm2_vec(r) <= target) {
      stats.relative_residual = true_residual();
      if (stats.relative_residual <= tol) {
        stats.converged = true;
        return {u, stats};
      }
      target *= 0.25;  // recursion drift; keep iterating to a tighter gate
    }
    for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  stats.relative_residual = true_residual();
  stats.converged = stats.relative_residual <= tol;
  return {u, stats};
}

struct SpdReport {
  double max_asymmetry = 0.0;
  double min_rayleigh = 0.0;
  bool all_positive = false;
};

/// Symmetry measure plus min Rayleigh quotient over random unit vectors.
inline SpdReport spd_probe(const SparseOperator& B, int trials,
                           std::uint64_t seed) {
  SpdReport rep;
  rep.max_asymmetry = B.max_asymmetry();
  rep.min_rayleigh = std::numeric_limits<double>::infinity();
  std::uint64_t state = seed ? seed : 1;
  auto next_unit = [&](std::vector<double>& v) {
    double nrm2 = 0.0;
    for (double& x : v) {
      state += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      z = z ^ (z >> 31);
      x = 2.0 * ((z >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
      nrm2 += x * x;
    }
    const double s = 1.0 / std::sqrt(nrm2);
    for (double& x : v) x *= s;
  };
  std::vector<double> v(B.n_rows), bv;
  for (int t = 0; t < trials; ++t) {
    next_unit(v);
    B.apply(v, bv);
    rep.min_rayleigh = std::min(rep.min_rayleigh, dot(v, bv));
  }
  rep.all_positive = rep.min_rayleigh > 0.0;
  return rep;
}

/// Full node vector from interior dofs, zeros at pinned boundary nodes.
inline ScalarGridFunction expand_scalar_solution(const MvdGrid& g,
                                                 const DiscreteSystem& sys,
                                                 const std::vector<double>& u) {
  ScalarGridFunction y;
  y.values.assign(g.nodes.size(), 0.0);
  for (int k = 0; k < g.node_count(); ++k) {
    const int d = sys.dof_map.index[k];
    if (d >= 0) y.values[k] = u[d];
  }
  return y;
}

/// Full cell function from free dofs, zeros at pinned components.
inline VectorCellFunction expand_vector_solution(const MvdGrid& g,
                                                 const DiscreteSystem& sys,
                                                 const std::vector<double>& u) {
  VectorCellFunction v;
  v.v1.assign(g.cells.size(), 0.0);
  v.v2.assign(g.cells.size(), 0.0);
  for (int m = 0; m < g.cell_count(); ++m) {
    const int d1 = sys.dof_map.index[2 * m];
    const int d2 = sys.dof_map.index[2 * m + 1];
    if (d1 >= 0) v.v1[m] = u[d1];
    if (d2 >= 0) v.v2[m] = u[d2];
  }
  return v;
}

/// S-weighted discrete L2 error against an exact scalar solution.
template <typename F>
double scalar_l2_error(const MvdGrid& g, const ScalarGridFunction& y, F&& exact) {
  double acc = 0.0;
  for (int k = 0; k < g.node_count(); ++k) {
    const double d = y.values[k] - exact(g.nodes[k].pos);
    acc += g.nodes[k].s * d * d;
  }
  return std::sqrt(acc);
}

/// S*-weighted discrete L2 error against an exact global-frame field.
template <typename F>
double vector_l2_error(const MvdGrid& g, const VectorCellFunction& v, F&& exact) {
  double acc = 0.0;
  for (int m = 0; m < g.cell_count(); ++m) {
    const Point2 got = to_global(g, v, m);
    const Point2 want = exact(g.cells[m].center);
    acc += g.cells[m].area * norm2(got - want);
  }
  return std::sqrt(acc);
}

}  // namespace mvd

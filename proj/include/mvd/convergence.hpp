#pragma once

// Manufactured-solution convergence studies over refinement levels.

#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mvd/bvp.hpp"
#include "mvd/generate.hpp"
#include "mvd/io.hpp"

namespace mvd {

enum class Scheme { Lattice, Jitter };

struct ExactSolution {
  std::function<double(Point2)> scalar;
  std::function<Point2(Point2)> vector;
};

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;       // max L_D
  double error = 0.0;   // discrete L2
  double order = 0.0;   // vs the previous level; 0 for the first
  int iterations = 0;
  double residual = 0.0;
};

struct ConvergenceTable {
  ProblemKind kind;
  std::vector<ConvergenceRow> rows;
};

inline MvdGrid build_level(const ConvexPolygon& domain, Scheme scheme, int n,
                           double alpha, std::uint64_t seed) {
  std::vector<Point2> pts =
      scheme == Scheme::Lattice ? generate_lattice(n)
                                : generate_jitter(n, alpha, seed);
  const Triangulation tri = delaunay(pts, domain);
  const VoronoiDiagram vor = voronoi(tri, domain);
  return build_mvd(tri, vor, domain);
}

/// Solves one level and reports the discrete L2 error.
inline ConvergenceRow run_level(const MvdGrid& g, ProblemKind kind,
                                const CoefficientSet& coeffs,
                                const ExactSolution& exact, double tol,
                                int maxit) {
  ConvergenceRow row;
  row.h = g.max_l_d();
  const DiscreteSystem sys = assemble(g, coeffs, kind);
  auto [u, stats] = cg_solve(sys, tol, maxit);
  if (!stats.converged)
    throw std::runtime_error("solver did not converge at h = " +
                             std::to_string(row.h) + " (residual " +
                             std::to_string(stats.relative_residual) + ")");
  row.iterations = stats.iterations;
  row.residual = stats.relative_residual;
  if (is_scalar_problem(kind)) {
    const ScalarGridFunction y = expand_scalar_solution(g, sys, u);
    row.error = scalar_l2_error(g, y, exact.scalar);
  } else {
    const VectorCellFunction v = expand_vector_solution(g, sys, u);
    row.error = vector_l2_error(g, v, exact.vector);
  }
  return row;
}

inline ConvergenceTable run_convergence(const ConvexPolygon& domain,
                                        Scheme scheme, double alpha,
                                        std::uint64_t seed,
                                        const std::vector<int>& levels,
                                        ProblemKind kind,
                                        const CoefficientSet& coeffs,
                                        const ExactSolution& exact, double tol,
                                        int maxit) {
  if (levels.size() < 2)
    throw std::invalid_argument("convergence study needs at least 2 levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw std::invalid_argument("levels must be strictly refining");
  ConvergenceTable table;
  table.kind = kind;
  for (int n : levels) {
    const MvdGrid g = build_level(domain, scheme, n, alpha, seed);
    ConvergenceRow row = run_level(g, kind, coeffs, exact, tol, maxit);
    row.n = n;
    if (!table.rows.empty()) {
      const ConvergenceRow& prev = table.rows.back();
      row.order = std::log(prev.error / row.error) / std::log(prev.h / row.h);
    }
    table.rows.push_back(row);
  }
  return table;
}

inline std::string table_to_json(const ConvergenceTable& t) {
  std::ostringstream os;
  os << "{\n  \"problem\": \"" << problem_name(t.kind) << "\",\n  \"levels\": [\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const ConvergenceRow& r = t.rows[i];
    os << "    {\"n\": " << r.n << ", \"h\": " << fmt17(r.h)
       << ", \"error\": " << fmt17(r.error)
       << ", \"order\": " << fmt17(r.order)
       << ", \"iterations\": " << r.iterations
       << ", \"residual\": " << fmt17(r.residual) << "}"
       << (i + 1 < t.rows.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  return os.str();
}

inline std::string table_to_text(const ConvergenceTable& t) {
  std::ostringstream os;
  os << "problem: " << problem_name(t.kind) << "\n";
  os << "    n           h          L2 error       order   iters\n";
  char buf[128];
  for (const ConvergenceRow& r : t.rows) {
    std::snprintf(buf, sizeof(buf), "%5d  %12.6e  %14.8e  %6.3f  %6d\n", r.n,
                  r.h, r.error, r.order, r.iterations);
    os << buf;
  }
  return os.str();
}

}  // namespace mvd

// mvd: merged Voronoi-Delaunay grids, consistent grid operators and
// operator-difference boundary value problems.
//
// Subcommands: generate, check, solve, converge, export.
// Exit codes: 0 ok, 2 I/O error, 3 solver non-convergence,
//             4 invalid coefficients, 5 inadmissible mesh.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvd/convergence.hpp"
#include "mvd/expr.hpp"
#include "mvd/io.hpp"

namespace {

using namespace mvd;

constexpr int kExitIo = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCoefficients = 4;
constexpr int kExitInadmissible = 5;

ConvexPolygon domain_from_arg(const std::string& arg) {
  if (arg == "square") return unit_square_domain();
  return read_polygon_csv(arg);
}

std::vector<Point2> points_from_args(const std::string& scheme, int n,
                                     double alpha, std::uint64_t seed,
                                     const ConvexPolygon& domain,
                                     const std::string& domain_arg) {
  if (scheme == "lattice" || scheme == "jitter") {
    if (domain_arg != "square")
      throw InadmissibleError(
          "the lattice/jitter schemes are defined on the unit square; "
          "use a point file for polygon domains");
    return scheme == "lattice" ? generate_lattice(n)
                               : generate_jitter(n, alpha, seed);
  }
  return read_points_csv(scheme, domain);
}

MvdGrid load_checked_mesh(const std::string& path) {
  MvdGrid g = load_mesh_json(path);
  check_grid_invariants(g);
  return g;
}

ProblemKind problem_from_arg(const std::string& p) {
  if (p == "diffusion") return ProblemKind::Diffusion;
  if (p == "graddiv") return ProblemKind::GradDiv;
  if (p == "rotrot-scalar") return ProblemKind::RotRotScalar;
  if (p == "rotrot-vector") return ProblemKind::RotRotVector;
  throw CLI::ValidationError("--problem", "unknown problem: " + p);
}

CoefficientSet coeffs_from_exprs(const std::string& k_expr,
                                 const std::string& c_expr,
                                 const std::string& f_expr,
                                 const std::string& f2_expr, bool vector) {
  CoefficientSet cs;
  const Expr k = parse_expr(k_expr);
  const Expr c = parse_expr(c_expr);
  cs.k = [k](Point2 p) { return k.eval(p); };
  cs.c = [c](Point2 p) { return c.eval(p); };
  if (vector) {
    if (f2_expr.empty())
      throw CLI::ValidationError("--f2", "vector problems need --f2");
    const Expr f1 = parse_expr(f_expr);
    const Expr f2 = parse_expr(f2_expr);
    cs.f_vec = [f1, f2](Point2 p) { return Point2{f1.eval(p), f2.eval(p)}; };
  } else {
    const Expr f1 = parse_expr(f_expr);
    cs.f = [f1](Point2 p) { return f1.eval(p); };
  }
  return cs;
}

int run(int argc, char** argv) {
  CLI::App app{"merged Voronoi-Delaunay grids and mimetic grid operators"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a mesh file");
  std::string gen_domain = "square";
  std::string gen_scheme = "lattice";
  int gen_n = 8;
  double gen_alpha = 0.2;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "mesh.json";
  gen->add_option("--domain", gen_domain, "square, or a polygon CSV file");
  gen->add_option("--scheme", gen_scheme,
                  "lattice, jitter, or a point CSV file");
  gen->add_option("--n", gen_n, "lattice subdivisions per side");
  gen->add_option("--alpha", gen_alpha, "jitter amplitude in units of h");
  gen->add_option("--seed", gen_seed, "jitter seed");
  gen->add_option("--out", gen_out, "output mesh JSON path")->required();

  // check
  auto* chk = app.add_subcommand("check", "validate a mesh file");
  std::string chk_mesh;
  chk->add_option("--mesh", chk_mesh, "mesh JSON path")->required();

  // solve
  auto* sol = app.add_subcommand("solve", "assemble and solve a problem");
  std::string sol_problem = "diffusion";
  std::string sol_mesh, sol_out = "solution";
  std::string sol_k = "1", sol_c = "1", sol_f = "0", sol_f2;
  std::string sol_exact, sol_exact2;
  double sol_tol = 1e-10;
  int sol_maxit = 20000;
  sol->add_option("--problem", sol_problem,
                  "diffusion | graddiv | rotrot-scalar | rotrot-vector");
  sol->add_option("--mesh", sol_mesh, "mesh JSON path")->required();
  sol->add_option("--k", sol_k, "coefficient k(x1,x2)");
  sol->add_option("--c", sol_c, "coefficient c(x1,x2)");
  sol->add_option("--f", sol_f, "right-hand side (first component)");
  sol->add_option("--f2", sol_f2, "right-hand side second component");
  sol->add_option("--exact", sol_exact, "exact solution (first component)");
  sol->add_option("--exact2", sol_exact2, "exact solution second component");
  sol->add_option("--tol", sol_tol, "CG relative residual tolerance");
  sol->add_option("--maxit", sol_maxit, "CG iteration cap");
  sol->add_option("--out", sol_out, "output prefix (.vtk and .json)");

  // converge
  auto* con = app.add_subcommand("converge", "manufactured-solution study");
  std::string con_problem = "diffusion";
  std::string con_domain = "square";
  std::string con_scheme = "lattice";
  std::string con_k = "1", con_c = "1", con_f = "0", con_f2;
  std::string con_exact, con_exact2;
  std::vector<int> con_levels;
  double con_alpha = 0.2, con_tol = 1e-10;
  std::uint64_t con_seed = 1;
  int con_maxit = 50000;
  std::string con_out;
  con->add_option("--problem", con_problem, "problem kind");
  con->add_option("--domain", con_domain, "square (lattice/jitter schemes)");
  con->add_option("--scheme", con_scheme, "lattice | jitter");
  con->add_option("--levels", con_levels, "lattice sizes, strictly refining")
      ->required()
      ->delimiter(',');
  con->add_option("--alpha", con_alpha, "jitter amplitude");
  con->add_option("--seed", con_seed, "jitter seed");
  con->add_option("--k", con_k, "coefficient k");
  con->add_option("--c", con_c, "coefficient c");
  con->add_option("--f", con_f, "right-hand side (first component)");
  con->add_option("--f2", con_f2, "right-hand side second component");
  con->add_option("--exact", con_exact, "exact solution (first component)")
      ->required();
  con->add_option("--exact2", con_exact2, "exact solution second component");
  con->add_option("--tol", con_tol, "CG tolerance");
  con->add_option("--maxit", con_maxit, "CG iteration cap");
  con->add_option("--out", con_out, "JSON table output path");

  // export
  auto* exp = app.add_subcommand("export", "export mesh geometry");
  std::string exp_mesh, exp_out = "mesh_out", exp_format = "vtk";
  exp->add_option("--mesh", exp_mesh, "mesh JSON path")->required();
  exp->add_option("--out", exp_out, "output path");
  exp->add_option("--format", exp_format, "vtk | json")
      ->check(CLI::IsMember({"vtk", "json"}));

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const ConvexPolygon domain = domain_from_arg(gen_domain);
    const std::vector<Point2> pts = points_from_args(
        gen_scheme, gen_n, gen_alpha, gen_seed, domain, gen_domain);
    const Triangulation tri = delaunay(pts, domain);
    const VoronoiDiagram vor = voronoi(tri, domain);
    const MvdGrid g = build_mvd(tri, vor, domain);
    write_mesh_json(g, gen_out);
    std::printf("wrote %s: %d nodes (%d D), %d cells, meas = %.12g\n",
                gen_out.c_str(), g.node_count(), g.n_d_nodes, g.cell_count(),
                g.measure());
    return 0;
  }

  if (chk->parsed()) {
    const MvdGrid g = load_checked_mesh(chk_mesh);
    const AdmissibilityReport rep = admissibility_report(g);
    double sum_star = 0.0;
    for (const Cell& c : g.cells) sum_star += c.area;
    std::printf("mesh %s: %d nodes, %d cells\n", chk_mesh.c_str(),
                g.node_count(), g.cell_count());
    std::printf("sum S* = %.12g (meas = %.12g)\n", sum_star, g.measure());
    std::printf("L_V in [%.6g, %.6g], L_D in [%.6g, %.6g], min S* = %.6g\n",
                rep.min_l_v, rep.max_l_v, rep.min_l_d, rep.max_l_d,
                rep.min_area);
    std::printf("circumcenters outside their control volume: %d\n",
                rep.circumcenters_outside_cv);
    std::printf("dart cells (center off the open V-segment): %d\n",
                rep.dart_cells);
    std::printf("min interior V-node distance to the boundary: %.6g\n",
                rep.min_vnode_boundary_dist);
    std::printf("check passed\n");
    return 0;
  }

  if (sol->parsed()) {
    const ProblemKind kind = problem_from_arg(sol_problem);
    const bool vector = !is_scalar_problem(kind);
    const MvdGrid g = load_checked_mesh(sol_mesh);
    const CoefficientSet cs =
        coeffs_from_exprs(sol_k, sol_c, sol_f, sol_f2, vector);
    const DiscreteSystem sys = assemble(g, cs, kind);
    auto [u, stats] = cg_solve(sys, sol_tol, sol_maxit);
    std::printf("%s: %d dofs, %d iterations, residual %.3e, %s\n",
                problem_name(kind), sys.dof_map.n_dofs, stats.iterations,
                stats.relative_residual,
                stats.converged ? "converged" : "NOT converged");
    if (!stats.converged) return kExitSolver;

    SolutionInfo info{kind, stats, false, 0.0};
    ScalarGridFunction ysol;
    VectorCellFunction vsol;
    if (vector) {
      vsol = expand_vector_solution(g, sys, u);
      if (!sol_exact.empty()) {
        if (sol_exact2.empty())
          throw CLI::ValidationError("--exact2",
                                     "vector problems need --exact2");
        const Expr e1 = parse_expr(sol_exact);
        const Expr e2 = parse_expr(sol_exact2);
        info.has_error = true;
        info.l2_error = vector_l2_error(g, vsol, [&](Point2 p) {
          return Point2{e1.eval(p), e2.eval(p)};
        });
      }
      write_vtk(g, {}, {{"solution", &vsol}}, sol_out + ".vtk");
      write_text_file(sol_out + ".json",
                      solution_to_json(g, info, nullptr, &vsol));
    } else {
      ysol = expand_scalar_solution(g, sys, u);
      if (!sol_exact.empty()) {
        const Expr e1 = parse_expr(sol_exact);
        info.has_error = true;
        info.l2_error =
            scalar_l2_error(g, ysol, [&](Point2 p) { return e1.eval(p); });
      }
      write_vtk(g, {{"solution", &ysol}}, {}, sol_out + ".vtk");
      write_text_file(sol_out + ".json",
                      solution_to_json(g, info, &ysol, nullptr));
    }
    if (info.has_error)
      std::printf("discrete L2 error vs exact: %.6e\n", info.l2_error);
    return 0;
  }

  if (con->parsed()) {
    const ProblemKind kind = problem_from_arg(con_problem);
    const bool vector = !is_scalar_problem(kind);
    if (con_domain != "square")
      throw InadmissibleError("converge: only the unit square domain is "
                              "supported (lattice/jitter schemes)");
    Scheme scheme;
    if (con_scheme == "lattice") scheme = Scheme::Lattice;
    else if (con_scheme == "jitter") scheme = Scheme::Jitter;
    else throw CLI::ValidationError("--scheme", "unknown scheme " + con_scheme);
    const CoefficientSet cs =
        coeffs_from_exprs(con_k, con_c, con_f, con_f2, vector);
    ExactSolution exact;
    if (vector) {
      if (con_exact2.empty())
        throw CLI::ValidationError("--exact2", "vector problems need --exact2");
      const Expr e1 = parse_expr(con_exact);
      const Expr e2 = parse_expr(con_exact2);
      exact.vector = [e1, e2](Point2 p) {
        return Point2{e1.eval(p), e2.eval(p)};
      };
    } else {
      const Expr e1 = parse_expr(con_exact);
      exact.scalar = [e1](Point2 p) { return e1.eval(p); };
    }
    const ConvergenceTable table =
        run_convergence(unit_square_domain(), scheme, con_alpha, con_seed,
                        con_levels, kind, cs, exact, con_tol, con_maxit);
    std::fputs(table_to_text(table).c_str(), stdout);
    if (!con_out.empty()) write_text_file(con_out, table_to_json(table));
    return 0;
  }

  if (exp->parsed()) {
    const MvdGrid g = load_checked_mesh(exp_mesh);
    if (exp_format == "vtk")
      write_vtk(g, {}, {}, exp_out);
    else
      write_text_file(exp_out, mesh_to_json(g));
    std::printf("exported %s\n", exp_out.c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mvd::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const mvd::CoefficientError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCoefficients;
  } catch (const mvd::InadmissibleError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInadmissible;
  } catch (const mvd::GeometryError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInadmissible;
  } catch (const mvd::ExprError& e) {
    std::fprintf(stderr, "expression error: %s\n", e.what());
    return 1;
  } catch (const mvd::EvalError& e) {
    std::fprintf(stderr, "expression error: %s\n", e.what());
    return 1;
  } catch (const std::runtime_error& e) {
    // solver non-convergence from the convergence driver
    const std::string msg = e.what();
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    return msg.find("did not converge") != std::string::npos ? kExitSolver : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

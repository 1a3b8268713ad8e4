#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mvd/bvp.hpp"
#include "mvd/generate.hpp"

using namespace mvd;

namespace {

MvdGrid build_from(const std::vector<Point2>& pts, const ConvexPolygon& dom) {
  const Triangulation tri = delaunay(pts, dom);
  return build_mvd(tri, voronoi(tri, dom), dom);
}

MvdGrid jitter_grid(int n, std::uint64_t seed) {
  return build_from(generate_jitter(n, 0.2, seed), unit_square_domain());
}

double uniform(std::uint64_t& state, double lo, double hi) {
  state = state * 6364136223846793005ull + 1442695040888963407ull;
  const double u = (state >> 11) * (1.0 / 9007199254740992.0);
  return lo + u * (hi - lo);
}

ScalarGridFunction random_interior(const MvdGrid& g, std::uint64_t& st) {
  ScalarGridFunction y;
  y.values.assign(g.nodes.size(), 0.0);
  for (int k = 0; k < g.node_count(); ++k)
    if (g.is_interior(k)) y.values[k] = uniform(st, -1, 1);
  return y;
}

VectorCellFunction random_cells(const MvdGrid& g, std::uint64_t& st) {
  VectorCellFunction v;
  v.v1.resize(g.cells.size());
  v.v2.resize(g.cells.size());
  for (int m = 0; m < g.cell_count(); ++m) {
    v.v1[m] = uniform(st, -1, 1);
    v.v2[m] = uniform(st, -1, 1);
  }
  return v;
}

CoefficientSet unit_coeffs_scalar() {
  CoefficientSet c;
  c.k = [](Point2) { return 1.0; };
  c.c = [](Point2) { return 1.0; };
  c.f = [](Point2) { return 1.0; };
  return c;
}

CoefficientSet unit_coeffs_vector() {
  CoefficientSet c;
  c.k = [](Point2) { return 1.0; };
  c.c = [](Point2) { return 1.0; };
  c.f_vec = [](Point2) { return Point2{1.0, 0.5}; };
  return c;
}

}  // namespace

TEST_CASE("duality: (grad y, v)_* + (y, div v) = 0 for y|boundary = 0") {
  std::uint64_t st = 2024;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const MvdGrid g = jitter_grid(8, seed);
    for (int trial = 0; trial < 5; ++trial) {
      const ScalarGridFunction y = random_interior(g, st);
      const VectorCellFunction v = random_cells(g, st);
      const double lhs = inner_cells(grad_h(g, y), v, g);
      ScalarGridFunction dv;
      dv.values.assign(g.nodes.size(), 0.0);
      for (int k = 0; k < g.node_count(); ++k)
        if (g.is_interior(k)) dv.values[k] = div_h_at(g, v, k);
      const double rhs = inner_omega(y, dv, g, Support::Interior);
      const double bound = 1e-12 * norm_omega(y, g) * norm_cells(v, g);
      CHECK(std::abs(lhs + rhs) <= bound);
    }
  }
}

TEST_CASE("rotor duality: (rot2D y, v)_* = (y, rot2D* v) for y|boundary = 0") {
  std::uint64_t st = 4048;
  for (std::uint64_t seed : {5ull, 6ull, 7ull, 8ull}) {
    const MvdGrid g = jitter_grid(8, seed);
    for (int trial = 0; trial < 5; ++trial) {
      const ScalarGridFunction y = random_interior(g, st);
      const VectorCellFunction v = random_cells(g, st);
      const double lhs = inner_cells(rot2d_scalar_h(g, y), v, g);
      ScalarGridFunction rv;
      rv.values.assign(g.nodes.size(), 0.0);
      for (int k = 0; k < g.node_count(); ++k)
        if (g.is_interior(k)) rv.values[k] = rot2d_vector_h_at(g, v, k);
      const double rhs = inner_omega(y, rv, g, Support::Interior);
      const double bound = 1e-12 * norm_omega(y, g) * norm_cells(v, g);
      CHECK(std::abs(lhs - rhs) <= bound);
    }
  }
}

TEST_CASE("diffusion assembly is symmetric with positive diagonal") {
  const MvdGrid g = jitter_grid(8, 12);
  const DiscreteSystem sys = assemble_diffusion(g, unit_coeffs_scalar());
  CHECK(sys.matrix.max_asymmetry() <= 1e-12 * sys.matrix.max_abs());
  const std::vector<double> diag = sys.matrix.diagonal();
  for (double d : diag) CHECK(d > 0.0);
  CHECK(sys.dof_map.n_dofs + static_cast<int>(sys.pinned.size()) ==
        g.node_count());
}

TEST_CASE("energy of a sampled linear field equals k |grad|^2 meas") {
  const MvdGrid g = jitter_grid(8, 13);
  const double a = 1.3, b = -0.7;
  const ScalarGridFunction y =
      sample_scalar([&](Point2 p) { return a * p.x + b * p.y; }, g);
  const VectorCellFunction gy = grad_h(g, y);
  const double energy = inner_cells(gy, gy, g);
  CHECK(energy == doctest::Approx((a * a + b * b) * g.measure()).epsilon(1e-12));
}

TEST_CASE("rot-rot-scalar assembles the diffusion matrix") {
  CoefficientSet coeffs;
  coeffs.k = [](Point2 p) { return 1.0 + p.x; };
  coeffs.c = [](Point2 p) { return 1.0 + p.y * p.y; };
  coeffs.f = [](Point2) { return 1.0; };
  for (int n : {8, 16}) {
    const MvdGrid g = jitter_grid(n, 21);
    const DiscreteSystem a = assemble_diffusion(g, coeffs);
    const DiscreteSystem b = assemble_rotrot_scalar(g, coeffs);
    REQUIRE(a.matrix.nnz() == b.matrix.nnz());
    const double scale = a.matrix.max_abs();
    for (int i = 0; i < a.matrix.nnz(); ++i) {
      CHECK(a.matrix.col[i] == b.matrix.col[i]);
      CHECK(std::abs(a.matrix.val[i] - b.matrix.val[i]) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("grad-div: divergence-free fields see only the mass term") {
  const MvdGrid g = jitter_grid(8, 22);
  const DiscreteSystem sys = assemble_graddiv(g, unit_coeffs_vector());
  CHECK(sys.matrix.max_asymmetry() <= 1e-12 * sys.matrix.max_abs());

  // u = rot2D_h of an interior-supported scalar is discretely
  // divergence-free and satisfies the normal boundary pinning
  std::uint64_t st = 5;
  const ScalarGridFunction y = random_interior(g, st);
  const VectorCellFunction u = rot2d_scalar_h(g, y);
  std::vector<double> dofs(sys.dof_map.n_dofs, 0.0);
  for (int m = 0; m < g.cell_count(); ++m) {
    const int d1 = sys.dof_map.index[2 * m];
    const int d2 = sys.dof_map.index[2 * m + 1];
    if (d1 >= 0) dofs[d1] = u.v1[m];
    else CHECK(std::abs(u.v1[m]) <= 1e-13);  // pinned normal comps vanish
    if (d2 >= 0) dofs[d2] = u.v2[m];
  }
  const std::vector<double> bu = sys.matrix.apply(dofs);
  const double quad = dot(dofs, bu);
  const double mass = inner_cells(u, u, g);
  CHECK(std::abs(quad - mass) <= 1e-12 * std::max(1.0, mass));
}

TEST_CASE("rot-rot-vector: gradient fields see only the mass term") {
  const MvdGrid g = jitter_grid(8, 23);
  const DiscreteSystem sys = assemble_rotrot_vector(g, unit_coeffs_vector());
  CHECK(sys.matrix.max_asymmetry() <= 1e-12 * sys.matrix.max_abs());

  std::uint64_t st = 6;
  const ScalarGridFunction y = random_interior(g, st);
  const VectorCellFunction u = grad_h(g, y);
  std::vector<double> dofs(sys.dof_map.n_dofs, 0.0);
  for (int m = 0; m < g.cell_count(); ++m) {
    const int d1 = sys.dof_map.index[2 * m];
    const int d2 = sys.dof_map.index[2 * m + 1];
    if (d1 >= 0) dofs[d1] = u.v1[m];
    if (d2 >= 0) dofs[d2] = u.v2[m];
    else CHECK(std::abs(u.v2[m]) <= 1e-13);  // pinned tangential comps vanish
  }
  const std::vector<double> bu = sys.matrix.apply(dofs);
  const double quad = dot(dofs, bu);
  const double mass = inner_cells(u, u, g);
  CHECK(std::abs(quad - mass) <= 1e-12 * std::max(1.0, mass));
}

TEST_CASE("weighted matrix-free diffusion operator reproduces B") {
  const MvdGrid g = jitter_grid(8, 24);
  CoefficientSet coeffs;
  coeffs.k = [](Point2 p) { return 1.0 + p.x; };
  coeffs.c = [](Point2 p) { return 1.0 + p.y * p.y; };
  coeffs.f = [](Point2) { return 0.0; };
  const DiscreteSystem sys = assemble_diffusion(g, coeffs);

  std::uint64_t st = 77;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> u(sys.dof_map.n_dofs);
    for (double& x : u) x = uniform(st, -1, 1);
    const ScalarGridFunction y = expand_scalar_solution(g, sys, u);

    VectorCellFunction v = grad_h(g, y);
    for (int m = 0; m < g.cell_count(); ++m) {
      const double kv = coeffs.k(g.cells[m].center);
      v.v1[m] *= kv;
      v.v2[m] *= kv;
    }
    const std::vector<double> bu = sys.matrix.apply(u);
    double worst = 0.0;
    for (int k = 0; k < g.node_count(); ++k) {
      const int d = sys.dof_map.index[k];
      if (d < 0) continue;
      const double ay = -div_h_at(g, v, k) +
                        coeffs.c(g.nodes[k].pos) * y.values[k];
      worst = std::max(worst, std::abs(g.nodes[k].s * ay - bu[d]));
    }
    CHECK(worst <= 1e-12 * sys.matrix.max_abs());
  }
}

TEST_CASE("weighted matrix-free rot-rot-vector operator reproduces B") {
  const MvdGrid g = jitter_grid(8, 25);
  CoefficientSet coeffs;
  coeffs.k = [](Point2 p) { return 1.0 + p.x; };
  coeffs.c = [](Point2 p) { return 1.0 + p.y * p.y; };
  coeffs.f_vec = [](Point2) { return Point2{0, 0}; };
  const DiscreteSystem sys = assemble_rotrot_vector(g, coeffs);

  std::uint64_t st = 88;
  std::vector<double> u(sys.dof_map.n_dofs);
  for (double& x : u) x = uniform(st, -1, 1);
  const VectorCellFunction uv = expand_vector_solution(g, sys, u);

  // y = k * rot2D* u at contributing nodes, zero elsewhere
  ScalarGridFunction y;
  y.values.assign(g.nodes.size(), 0.0);
  for (int k = 0; k < g.node_count(); ++k) {
    const GridNode& n = g.nodes[k];
    if (n.role == NodeRole::VClip) continue;
    if (n.boundary && n.role != NodeRole::D) continue;
    y.values[k] = coeffs.k(n.pos) * rot2d_vector_h_at(g, uv, k);
  }
  const VectorCellFunction ry = rot2d_scalar_h(g, y);
  const std::vector<double> bu = sys.matrix.apply(u);
  double worst = 0.0;
  for (int m = 0; m < g.cell_count(); ++m) {
    const Cell& c = g.cells[m];
    const double cc = coeffs.c(c.center);
    const double a1 = ry.v1[m] + cc * uv.v1[m];
    const double a2 = ry.v2[m] + cc * uv.v2[m];
    const int d1 = sys.dof_map.index[2 * m];
    const int d2 = sys.dof_map.index[2 * m + 1];
    if (d1 >= 0) worst = std::max(worst, std::abs(c.area * a1 - bu[d1]));
    if (d2 >= 0) worst = std::max(worst, std::abs(c.area * a2 - bu[d2]));
  }
  CHECK(worst <= 1e-12 * sys.matrix.max_abs());
}

TEST_CASE("cg solves simple systems") {
  // identity
  DiscreteSystem sys;
  sys.matrix = SparseOperator::from_triplets(
      3, 3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}}, true);
  sys.rhs = {1.0, -2.0, 0.5};
  sys.weight = {1, 1, 1};
  auto [u, stats] = cg_solve(sys, 1e-12, 10);
  CHECK(stats.converged);
  CHECK(stats.iterations == 1);
  CHECK(u[0] == doctest::Approx(1.0));
  CHECK(u[1] == doctest::Approx(-2.0));
  CHECK(u[2] == doctest::Approx(0.5));

  DiscreteSystem sys2;
  sys2.matrix =
      SparseOperator::from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 8.0}}, true);
  sys2.rhs = {2.0, 8.0};
  sys2.weight = {1, 1};
  auto [u2, stats2] = cg_solve(sys2, 1e-12, 10);
  CHECK(stats2.converged);
  CHECK(u2[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u2[1] == doctest::Approx(1.0).epsilon(1e-12));

  // non-convergence within maxit reports honestly
  const MvdGrid g = jitter_grid(8, 26);
  DiscreteSystem big = assemble_diffusion(g, unit_coeffs_scalar());
  auto [u3, stats3] = cg_solve(big, 1e-12, 2);
  CHECK(!stats3.converged);

  // nonpositive diagonal
  DiscreteSystem bad;
  bad.matrix =
      SparseOperator::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}}, true);
  bad.rhs = {1.0, 1.0};
  CHECK_THROWS_WITH_AS(cg_solve(bad, 1e-10, 5),
                       doctest::Contains("not positive definite"),
                       std::invalid_argument);
}

TEST_CASE("assembled diffusion solve: residual verified independently") {
  const MvdGrid g = build_from(generate_lattice(32), unit_square_domain());
  CoefficientSet coeffs = unit_coeffs_scalar();
  coeffs.f = [](Point2 p) {
    return (2.0 * M_PI * M_PI + 1.0) * std::sin(M_PI * p.x) *
           std::sin(M_PI * p.y);
  };
  const DiscreteSystem sys = assemble_diffusion(g, coeffs);
  auto [u, stats] = cg_solve(sys, 1e-10, 10000);
  CHECK(stats.converged);
  // independent residual recomputation
  const std::vector<double> bu = sys.matrix.apply(u);
  double rn = 0.0, bn = 0.0;
  for (std::size_t i = 0; i < bu.size(); ++i) {
    rn += (bu[i] - sys.rhs[i]) * (bu[i] - sys.rhs[i]);
    bn += sys.rhs[i] * sys.rhs[i];
  }
  CHECK(std::sqrt(rn / bn) <= 1e-10);
}

TEST_CASE("spd probe") {
  const SparseOperator d3 = SparseOperator::from_triplets(
      3, 3, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 3.0}}, true);
  const SpdReport rep = spd_probe(d3, 50, 9);
  CHECK(rep.max_asymmetry == 0.0);
  CHECK(rep.min_rayleigh >= 1.0 - 1e-12);
  CHECK(rep.all_positive);

  const SparseOperator upper =
      SparseOperator::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}});
  CHECK(upper.max_asymmetry() == doctest::Approx(2.0));

  const MvdGrid g = jitter_grid(8, 27);
  const DiscreteSystem sys = assemble_diffusion(g, unit_coeffs_scalar());
  const SpdReport rep2 = spd_probe(sys.matrix, 100, 11);
  double min_w = std::numeric_limits<double>::infinity();
  for (double w : sys.weight) min_w = std::min(min_w, w);
  CHECK(rep2.min_rayleigh >= sys.min_c_sample * min_w);
  CHECK(rep2.all_positive);
}

TEST_CASE("coefficient bound violations are reported with the sample point") {
  const MvdGrid g = jitter_grid(6, 28);
  CoefficientSet coeffs = unit_coeffs_scalar();
  coeffs.c = [](Point2) { return 0.0; };
  CHECK_THROWS_WITH_AS(assemble_diffusion(g, coeffs), doctest::Contains("c "),
                       CoefficientError);
  CoefficientSet coeffs2 = unit_coeffs_scalar();
  coeffs2.k = [](Point2 p) { return p.x - 0.5; };
  CHECK_THROWS_AS(assemble_diffusion(g, coeffs2), CoefficientError);
}

TEST_CASE("rot-rot-scalar solves to the diffusion solution") {
  const MvdGrid g = jitter_grid(12, 30);
  CoefficientSet coeffs = unit_coeffs_scalar();
  coeffs.f = [](Point2 p) {
    return (2.0 * M_PI * M_PI + 1.0) * std::sin(M_PI * p.x) *
           std::sin(M_PI * p.y);
  };
  const double tol = 1e-10;
  const DiscreteSystem sa = assemble_diffusion(g, coeffs);
  const DiscreteSystem sb = assemble_rotrot_scalar(g, coeffs);
  auto [ua, sta] = cg_solve(sa, tol, 20000);
  auto [ub, stb] = cg_solve(sb, tol, 20000);
  REQUIRE(sta.converged);
  REQUIRE(stb.converged);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < ua.size(); ++i) {
    diff = std::max(diff, std::abs(ua[i] - ub[i]));
    scale = std::max(scale, std::abs(ua[i]));
  }
  CHECK(diff <= 10.0 * tol * std::max(1.0, scale));
}

TEST_CASE("manufactured rot-rot-vector error decreases under refinement") {
  // u = (sin(pi x2) (1 - cos(2 pi x1)) / 2, 0): tangential trace vanishes
  // on all four sides of the unit square
  CoefficientSet coeffs;
  coeffs.k = [](Point2) { return 1.0; };
  coeffs.c = [](Point2) { return 1.0; };
  coeffs.f_vec = [](Point2 p) {
    const double a = std::sin(M_PI * p.y) * (1.0 - std::cos(2 * M_PI * p.x));
    return Point2{(M_PI * M_PI + 1.0) * 0.5 * a,
                  M_PI * M_PI * std::cos(M_PI * p.y) * std::sin(2 * M_PI * p.x)};
  };
  auto exact = [](Point2 p) {
    return Point2{
        0.5 * std::sin(M_PI * p.y) * (1.0 - std::cos(2 * M_PI * p.x)), 0.0};
  };
  double prev = 0.0;
  bool first = true;
  for (int n : {8, 16}) {
    const MvdGrid g = build_from(generate_lattice(n), unit_square_domain());
    const DiscreteSystem sys = assemble_rotrot_vector(g, coeffs);
    auto [u, stats] = cg_solve(sys, 1e-10, 50000);
    REQUIRE(stats.converged);
    const double err = vector_l2_error(g, expand_vector_solution(g, sys, u), exact);
    if (!first) CHECK(err < 0.5 * prev);
    prev = err;
    first = false;
  }
}

TEST_CASE("manufactured diffusion error decreases under refinement") {
  auto exact = [](Point2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  CoefficientSet coeffs = unit_coeffs_scalar();
  coeffs.f = [](Point2 p) {
    return (2.0 * M_PI * M_PI + 1.0) * std::sin(M_PI * p.x) *
           std::sin(M_PI * p.y);
  };
  double prev = 0.0;
  bool first = true;
  for (int n : {8, 16}) {
    const MvdGrid g = build_from(generate_lattice(n), unit_square_domain());
    const DiscreteSystem sys = assemble_diffusion(g, coeffs);
    auto [u, stats] = cg_solve(sys, 1e-10, 10000);
    REQUIRE(stats.converged);
    const double err =
        scalar_l2_error(g, expand_scalar_solution(g, sys, u), exact);
    if (!first) CHECK(err < 0.5 * prev);
    prev = err;
    first = false;
  }
}

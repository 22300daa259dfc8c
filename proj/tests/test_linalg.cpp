#include <doctest.h>

#include <cmath>
#include <random>

#include "drlm/operators.hpp"
#include "drlm/problems.hpp"
#include "drlm/selfcheck.hpp"
#include "drlm/solvers.hpp"
#include "support.hpp"

using namespace drlm;
using drlm::test::pi;

namespace {

double interior_norm(const VelocityField& w) {
  double s = 0.0;
  const Grid& g = w.grid();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) s += w.u(i, j) * w.u(i, j);
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) s += w.v(i, j) * w.v(i, j);
  return std::sqrt(s);
}

double euclid(const ScalarField& s) {
  double sum = 0.0;
  for (double x : s.values()) sum += x * x;
  return std::sqrt(sum);
}

bool non_increasing(const std::vector<double>& h) {
  for (std::size_t k = 1; k < h.size(); ++k)
    if (h[k] > h[k - 1] * (1.0 + 10.0 * 2.220446049250313e-16)) return false;
  return true;
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.abs_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  CHECK(cfg.iteration_cap(Grid(8, 4)) == 120);
  CHECK(parse_pressure_preconditioner("mic0") == PressurePreconditioner::mic0);
  CHECK(to_string(PressurePreconditioner::jacobi) == "jacobi");
  CHECK_THROWS(parse_pressure_preconditioner("ilu"));
}

TEST_CASE("Helmholtz with nu = 0 is a diagonal solve") {
  std::mt19937_64 rng(1);
  const Grid g(9, 7);
  const VelocityField rhs = random_velocity(g, rng);
  const BoundaryTrace bc = random_trace(g, rng);
  const auto sol = helmholtz_solve(4.0, 0.0, rhs, bc, {});
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 1; i < g.nx(); ++i) CHECK(sol.x.u(i, j) == doctest::Approx(rhs.u(i, j) / 4.0).epsilon(1e-14));
    CHECK(sol.x.u(0, j) == bc.u_left[j]);
    CHECK(sol.x.u(g.nx(), j) == bc.u_right[j]);
  }
  for (int i = 0; i < g.nx(); ++i) CHECK(sol.x.v(i, g.ny()) == bc.v_top[i]);
}

TEST_CASE("Helmholtz recovers a discrete manufactured solution") {
  auto fu = [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); };
  auto fv = [](double x, double y) { return std::cos(2 * pi * x) * std::cos(2 * pi * y); };
  const Grid g = Grid::unit_square(32);
  const VelocityField exact = sample_velocity(g, fu, fv);
  const BoundaryTrace bc = BoundaryTrace::sample(g, fu, fv);
  const double alpha = 64.0, nu = 0.1;
  const VelocityField rhs = apply_helmholtz(alpha, nu, exact, bc);
  SolverConfig cfg;
  cfg.rel_tol = 1e-13;
  const auto sol = helmholtz_solve(alpha, nu, rhs, bc, cfg);
  CHECK(sol.report.converged);
  CHECK(test::max_abs_diff(sol.x, exact) <= 1e-11);
}

TEST_CASE("Helmholtz residual contract on random data") {
  std::mt19937_64 rng(2);
  const Grid g(24, 16, 0.0, 1.5, 0.0, 1.0);
  const VelocityField rhs = random_velocity(g, rng);
  const BoundaryTrace bc = BoundaryTrace::zero(g);
  const SolverConfig cfg;
  const auto sol = helmholtz_solve(10.0, 0.3, rhs, bc, cfg);
  const VelocityField res = apply_helmholtz(10.0, 0.3, sol.x, bc) - rhs;
  CHECK(sol.report.converged);
  CHECK(interior_norm(res) <= 1.01 * std::max(cfg.rel_tol * interior_norm(rhs), cfg.abs_tol));
  CHECK(non_increasing(sol.report.residual_history));
}

TEST_CASE("Neumann Poisson basic contracts") {
  const Grid g(16, 12);
  SUBCASE("zero rhs") {
    const auto sol = poisson_neumann_solve(ScalarField(g), {});
    CHECK(sol.x.max_abs() == 0.0);
    CHECK(sol.report.converged);
  }
  SUBCASE("shift invariance and zero mean") {
    std::mt19937_64 rng(4);
    ScalarField rhs = random_scalar(g, rng);
    rhs.remove_mean();
    ScalarField shifted = rhs;
    for (double& x : shifted.values()) x += 3.0;
    SolverConfig cfg;
    cfg.rel_tol = 1e-13;
    const auto a = poisson_neumann_solve(rhs, cfg);
    const auto b = poisson_neumann_solve(shifted, cfg);
    CHECK(test::max_abs_diff(a.x, b.x) <= 1e-10 * a.x.max_abs());
    CHECK(std::abs(a.x.mean()) <= 1e-12 * std::max(1.0, a.x.max_abs()));
    CHECK(std::abs(b.x.mean()) <= 1e-12 * std::max(1.0, b.x.max_abs()));
    CHECK_FALSE(a.report.compatibility_warning);
    CHECK(b.report.compatibility_warning);
  }
  SUBCASE("residual contract") {
    std::mt19937_64 rng(8);
    ScalarField rhs = random_scalar(g, rng);
    rhs.remove_mean();
    const SolverConfig cfg;
    const auto sol = poisson_neumann_solve(rhs, cfg);
    const ScalarField res = apply_neumann_laplacian(sol.x) - rhs;
    CHECK(euclid(res) <= 1.01 * std::max(cfg.rel_tol * euclid(rhs), cfg.abs_tol));
  }
}

TEST_CASE("Neumann cosine mode converges at second order") {
  std::vector<double> errors;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::unit_square(n);
    ScalarField rhs(g), exact(g);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        rhs(i, j) = pi * pi * std::cos(pi * g.center_x(i));
        exact(i, j) = std::cos(pi * g.center_x(i));
      }
    exact.remove_mean();
    SolverConfig cfg;
    cfg.rel_tol = 1e-13;
    errors.push_back(test::max_abs_diff(poisson_neumann_solve(rhs, cfg).x, exact));
  }
  CHECK(test::worst_order(errors) >= 1.9);
}

TEST_CASE("reported residuals are non-increasing for both preconditioners") {
  std::mt19937_64 rng(13);
  const Grid g = Grid::unit_square(64);
  ScalarField rhs = random_scalar(g, rng);
  rhs.remove_mean();
  for (PressurePreconditioner pc : {PressurePreconditioner::jacobi, PressurePreconditioner::mic0}) {
    SolverConfig cfg;
    cfg.pressure_preconditioner = pc;
    const auto sol = poisson_neumann_solve(rhs, cfg);
    INFO(to_string(pc));
    CHECK(sol.report.converged);
    CHECK(sol.report.residual_history.size() == static_cast<std::size_t>(sol.report.iterations) + 1);
    CHECK(non_increasing(sol.report.residual_history));
  }
}

TEST_CASE("MIC(0) and Jacobi solve the same problem") {
  std::mt19937_64 rng(21);
  const Grid g(48, 40, 0.0, 1.2, 0.0, 1.0);
  ScalarField rhs = random_scalar(g, rng);
  rhs.remove_mean();
  SolverConfig jac;
  jac.rel_tol = 1e-13;
  SolverConfig mic = jac;
  mic.pressure_preconditioner = PressurePreconditioner::mic0;
  const auto a = poisson_neumann_solve(rhs, jac);
  const auto b = poisson_neumann_solve(rhs, mic);
  CHECK(test::max_abs_diff(a.x, b.x) <= 1e-10 * a.x.max_abs());
  CHECK(b.report.iterations < a.report.iterations);
}

TEST_CASE("solves are bit-for-bit deterministic") {
  std::mt19937_64 rng(9);
  const Grid g(20, 20);
  const VelocityField rhs = random_velocity(g, rng);
  ScalarField prhs = random_scalar(g, rng);
  const BoundaryTrace bc = random_trace(g, rng);
  const auto a = helmholtz_solve(5.0, 0.2, rhs, bc, {});
  const auto b = helmholtz_solve(5.0, 0.2, rhs, bc, {});
  CHECK(test::max_abs_diff(a.x, b.x) == 0.0);
  CHECK(a.report.residual_history == b.report.residual_history);
  const auto c = poisson_neumann_solve(prhs, {});
  const auto d = poisson_neumann_solve(prhs, {});
  CHECK(test::max_abs_diff(c.x, d.x) == 0.0);
}

TEST_CASE("warm start changes only the iteration count") {
  std::mt19937_64 rng(10);
  const Grid g(32, 32);
  ScalarField rhs = random_scalar(g, rng);
  rhs.remove_mean();
  SolverConfig cfg;
  cfg.rel_tol = 1e-13;
  const auto cold = poisson_neumann_solve(rhs, cfg);
  const auto warm = poisson_neumann_solve(rhs, cfg, &cold.x);
  CHECK(warm.report.iterations < cold.report.iterations);
  CHECK(test::max_abs_diff(cold.x, warm.x) <= 1e-10 * cold.x.max_abs());
}

TEST_CASE("non-convergence raises SolverError carrying the report") {
  std::mt19937_64 rng(6);
  const Grid g(32, 32);
  ScalarField rhs = random_scalar(g, rng);
  SolverConfig cfg;
  cfg.max_iter = 2;
  try {
    (void)poisson_neumann_solve(rhs, cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK_FALSE(e.report().converged);
    CHECK(e.report().iterations == 2);
  }
  CHECK_THROWS_AS(helmholtz_solve(1.0, 1.0, random_velocity(g, rng), BoundaryTrace::zero(g), cfg), SolverError);
}

TEST_CASE("projection removes divergence and leaves solenoidal samples unchanged") {
  const ExactSolution ex = lattice_vortex(0.1);
  std::vector<double> gaps;
  for (int n : {16, 32, 64}) {
    const Grid g = Grid::unit_square(n);
    VelocityField w = sample_velocity(
        g, [](double x, double y) { return x * (1 - x) * y; }, [](double, double) { return 0.0; });
    const VelocityField p = project_divergence_free(w);
    CHECK(divergence_inf(p) <= 1e-8);
    const VelocityField s = ex.sample_velocity(g, 0.0);
    gaps.push_back(norm_vel(project_divergence_free(s) - s));
  }
  for (double gap : gaps) CHECK(gap <= 1e-10);
}

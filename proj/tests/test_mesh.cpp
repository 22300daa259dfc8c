#include <doctest.h>

#include <cmath>
#include <random>

#include "drlm/grid.hpp"
#include "drlm/operators.hpp"
#include "drlm/problems.hpp"
#include "drlm/selfcheck.hpp"
#include "support.hpp"

using namespace drlm;
using drlm::test::pi;

TEST_CASE("grid layout and preconditions") {
  const Grid g(5, 3, 0.0, 2.0, -1.0, 0.5);
  CHECK(g.hx() == doctest::Approx(0.4));
  CHECK(g.hy() == doctest::Approx(0.5));
  CHECK(g.u_size() == 6u * 3u);
  CHECK(g.v_size() == 5u * 4u);
  CHECK(g.cell_count() == 15u);
  CHECK(g.u_index(5, 2) == g.u_size() - 1);
  CHECK(g.v_index(4, 3) == g.v_size() - 1);
  CHECK_THROWS_AS(Grid(1, 4), ContractViolation);
  CHECK_THROWS_AS(Grid(4, 4, 1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(ScalarField(g, std::vector<double>(3)), ContractViolation);
  CHECK_THROWS_AS(divergence(VelocityField(g)) + ScalarField(Grid(4, 4)), ContractViolation);
}

TEST_CASE("remove_mean leaves a zero-mean field") {
  std::mt19937_64 rng(3);
  ScalarField s = random_scalar(Grid::unit_square(9, 7), rng);
  s *= 1e3;
  s.remove_mean();
  CHECK(std::abs(s.mean()) <= 1e-12 * std::max(1.0, s.max_abs()));
}

TEST_CASE("divergence examples") {
  const Grid g = Grid::unit_square(8, 6);
  SUBCASE("uniform field") {
    VelocityField w(g);
    for (double& x : w.u_values()) x = 1.0;
    CHECK(divergence(w).max_abs() == 0.0);
  }
  SUBCASE("u = x") {
    const VelocityField w = sample_velocity(g, [](double x, double) { return x; }, [](double, double) { return 0.0; });
    const ScalarField d = divergence(w);
    for (double x : d.values()) CHECK(x == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("lattice vortex samples are discretely divergence-free") {
  // Centered differences scale both derivatives by the same factor
  // sin(pi h)/(pi h), so the continuous cancellation survives exactly.
  const ExactSolution ex = lattice_vortex(0.1);
  for (int n : {16, 32, 64}) {
    const VelocityField w = ex.sample_velocity(Grid::unit_square(n), 0.0);
    CHECK(divergence_inf(w) <= 1e-11);
  }
}

TEST_CASE("divergence is second-order consistent") {
  auto fu = [](double x, double y) { return std::sin(pi * x) * std::cos(2.0 * y); };
  auto fv = [](double x, double y) { return std::exp(x) * y * y; };
  auto exact = [](double x, double y) { return pi * std::cos(pi * x) * std::cos(2.0 * y) + 2.0 * std::exp(x) * y; };
  std::vector<double> errors;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::unit_square(n);
    const ScalarField d = divergence(sample_velocity(g, fu, fv));
    double e = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) e = std::max(e, std::abs(d(i, j) - exact(g.center_x(i), g.center_y(j))));
    errors.push_back(e);
  }
  CHECK(test::worst_order(errors) >= 1.9);
}

TEST_CASE("gradient examples") {
  const Grid g = Grid::unit_square(7, 5);
  SUBCASE("constant") {
    ScalarField s(g);
    for (double& x : s.values()) x = 4.25;
    CHECK(gradient(s).max_abs() == 0.0);
  }
  SUBCASE("s = x") {
    ScalarField s(g);
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) s(i, j) = g.center_x(i);
    const VelocityField gr = gradient(s);
    for (int j = 0; j < g.ny(); ++j) {
      CHECK(gr.u(0, j) == 0.0);
      CHECK(gr.u(g.nx(), j) == 0.0);
      for (int i = 1; i < g.nx(); ++i) CHECK(gr.u(i, j) == doctest::Approx(1.0).epsilon(1e-13));
    }
    for (double x : gr.v_values()) CHECK(x == 0.0);
  }
}

TEST_CASE("discrete duality of gradient and divergence") {
  std::mt19937_64 rng(11);
  for (const Grid& g : {Grid::unit_square(4), Grid(7, 5), Grid(12, 20, 0.0, 2.0, -1.0, 0.5)}) {
    for (int trial = 0; trial < 5; ++trial) {
      const ScalarField s = random_scalar(g, rng);
      const VelocityField w = random_velocity(g, rng, true);
      const double lhs = inner_vel(gradient(s), w);
      const double rhs = -inner_cell(s, divergence(w));
      CHECK(std::abs(lhs - rhs) <= 1e-13 * std::max({1.0, std::abs(lhs), norm_vel(w) * norm_cell(s)}));
    }
  }
}

TEST_CASE("divergence of gradient is the Neumann Laplacian with zero row sums") {
  const Grid g(6, 5);
  ScalarField ones(g);
  for (double& x : ones.values()) x = 1.0;
  CHECK(divergence(gradient(ones)).max_abs() == 0.0);
  // Column k of the operator; its entries must sum to zero and match the 5-point stencil.
  for (int k : {0, 7, 29}) {
    ScalarField e(g);
    e.values()[k] = 1.0;
    const ScalarField col = divergence(gradient(e));
    double sum = 0.0;
    for (double x : col.values()) sum += x;
    CHECK(std::abs(sum) <= 1e-12 * col.max_abs());
    const int i = k % g.nx(), j = k / g.nx();
    const int neighbours_x = (i > 0) + (i < g.nx() - 1);
    const int neighbours_y = (j > 0) + (j < g.ny() - 1);
    const double diag = -neighbours_x / (g.hx() * g.hx()) - neighbours_y / (g.hy() * g.hy());
    CHECK(col(i, j) == doctest::Approx(diag).epsilon(1e-13));
  }
}

TEST_CASE("Laplacian of the zero field is zero") {
  const Grid g(5, 7);
  CHECK(laplacian_velocity(VelocityField(g), BoundaryTrace::zero(g)).max_abs() == 0.0);
}

TEST_CASE("Laplacian eigenfunction refinement") {
  auto fu = [](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); };
  auto zero = [](double, double) { return 0.0; };
  std::vector<double> errors;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::unit_square(n);
    const VelocityField w = sample_velocity(g, fu, zero);
    const VelocityField lap = laplacian_velocity(w, BoundaryTrace::sample(g, fu, zero));
    double e = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 1; i < n; ++i) e = std::max(e, std::abs(lap.u(i, j) + 8 * pi * pi * w.u(i, j)));
    errors.push_back(e);
  }
  CHECK(test::worst_order(errors) >= 1.9);
}

TEST_CASE("Laplacian symmetry and summation by parts") {
  std::mt19937_64 rng(5);
  for (const Grid& g : {Grid::unit_square(4), Grid(9, 6), Grid(16, 12, 0.0, 2.0, -1.0, 0.5)}) {
    const BoundaryTrace zero = BoundaryTrace::zero(g);
    const VelocityField a = random_velocity(g, rng, true);
    const VelocityField b = random_velocity(g, rng, true);
    const double lab = inner_vel(laplacian_velocity(a, zero), b);
    const double alb = inner_vel(a, laplacian_velocity(b, zero));
    CHECK(std::abs(lab - alb) <= 1e-13 * std::abs(lab));
    const double energy = -inner_vel(laplacian_velocity(a, zero), a);
    const double seminorm = grad_seminorm_vel(a, zero);
    CHECK(std::abs(energy - seminorm * seminorm) <= 1e-12 * energy);
  }
}

TEST_CASE("operators are linear") {
  std::mt19937_64 rng(17);
  const Grid g(10, 8);
  const double a = 0.37, b = -2.5;
  const VelocityField x = random_velocity(g, rng), y = random_velocity(g, rng);
  const ScalarField s = random_scalar(g, rng), r = random_scalar(g, rng);
  const BoundaryTrace tx = random_trace(g, rng), ty = random_trace(g, rng);

  CHECK(test::max_abs_diff(divergence(a * x + b * y), a * divergence(x) + b * divergence(y)) <= 1e-12);
  CHECK(test::max_abs_diff(gradient(a * s + b * r), a * gradient(s) + b * gradient(r)) <= 1e-12);
  const VelocityField lhs = laplacian_velocity(a * x + b * y, tx.combined(a, ty, b));
  const VelocityField rhs = a * laplacian_velocity(x, tx) + b * laplacian_velocity(y, ty);
  CHECK(test::max_abs_diff(lhs, rhs) <= 1e-13 * rhs.max_abs());
}

TEST_CASE("inner products") {
  const Grid g = Grid::unit_square(6);
  const VelocityField z(g);
  CHECK(inner_vel(z, z) == 0.0);

  // Constant 1 in both components integrates to the area in each component.
  VelocityField one(g);
  for (double& x : one.u_values()) x = 1.0;
  for (double& x : one.v_values()) x = 1.0;
  CHECK(inner_vel(one, one) == doctest::Approx(2.0).epsilon(1e-14));

  const ExactSolution ex = lattice_vortex(0.1);
  const double n2 = std::pow(norm_vel(ex.sample_velocity(Grid::unit_square(128), 0.0)), 2);
  CHECK(std::abs(n2 - 0.5) <= 1e-3);
}

TEST_CASE("pressure gradient norm converges to the quadrature value") {
  // |grad p0|^2 integrated by Gauss quadrature of the analytic gradient.
  auto dpx = [](double x, double) { return -pi * std::sin(4 * pi * x); };
  auto dpy = [](double, double y) { return pi * std::sin(4 * pi * y); };
  const double oracle = test::integrate_unit_square([&](double x, double y) {
    return dpx(x, y) * dpx(x, y) + dpy(x, y) * dpy(x, y);
  });
  CHECK(oracle == doctest::Approx(pi * pi).epsilon(1e-12));

  const ExactSolution ex = lattice_vortex(0.1);
  std::vector<double> errors;
  for (int n : {16, 32, 64, 128}) {
    const double gn = grad_norm_pressure(ex.sample_pressure(Grid::unit_square(n), 0.0));
    errors.push_back(std::abs(gn * gn - oracle));
  }
  CHECK(test::worst_order(errors) >= 1.9);
}

TEST_CASE("operator identity suite passes") {
  const SelfCheckReport report = run_operator_identities();
  for (const IdentityCheck& c : report.checks) {
    INFO(c.name << " residual " << c.residual << " tolerance " << c.tolerance);
    CHECK(c.passed());
  }
  CHECK(report.failed() == 0);
}

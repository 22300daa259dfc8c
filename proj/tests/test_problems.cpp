#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "drlm/operators.hpp"
#include "drlm/problems.hpp"
#include "support.hpp"

using namespace drlm;
using drlm::test::pi;

TEST_CASE("lattice vortex closed form") {
  const ExactSolution ex = lattice_vortex(0.1);
  CHECK(ex.u(0.25, 0.25, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(ex.v(0.25, 0.25, 0.0)) <= 1e-15);
  CHECK(std::abs(ex.p(0.25, 0.25, 0.0)) <= 1e-15);
  const double decay = std::exp(-8.0 * 0.1 * pi * pi * 0.7);
  for (double x : {0.1, 0.37, 0.8})
    for (double y : {0.05, 0.5, 0.93}) {
      CHECK(ex.u(x, y, 0.7) == doctest::Approx(ex.u(x, y, 0.0) * decay).epsilon(1e-13));
      CHECK(ex.v(x, y, 0.7) == doctest::Approx(ex.v(x, y, 0.0) * decay).epsilon(1e-13));
    }
  CHECK_THROWS_AS(lattice_vortex(0.0), ContractViolation);
}

TEST_CASE("lattice vortex solves the momentum and continuity equations") {
  // Sixth-order central differences of the closed form at random points.
  const double nu = 0.1;
  const ExactSolution ex = lattice_vortex(nu);
  auto d1 = [](auto f, double h) {
    return (f(3 * h) - 9 * f(2 * h) + 45 * f(h) - 45 * f(-h) + 9 * f(-2 * h) - f(-3 * h)) / (60 * h);
  };
  auto d2 = [](auto f, double h) {
    return (2 * f(3 * h) - 27 * f(2 * h) + 270 * f(h) - 490 * f(0.0) + 270 * f(-h) - 27 * f(-2 * h) + 2 * f(-3 * h)) /
           (180 * h * h);
  };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double h = 1e-3;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double x = U(rng), y = U(rng), t = U(rng);
    for (int comp = 0; comp < 2; ++comp) {
      const auto& f = comp == 0 ? ex.u : ex.v;
      const double ft = d1([&](double s) { return f(x, y, t + s); }, h);
      const double fx = d1([&](double s) { return f(x + s, y, t); }, h);
      const double fy = d1([&](double s) { return f(x, y + s, t); }, h);
      const double lap = d2([&](double s) { return f(x + s, y, t); }, h) + d2([&](double s) { return f(x, y + s, t); }, h);
      const double px = comp == 0 ? d1([&](double s) { return ex.p(x + s, y, t); }, h)
                                  : d1([&](double s) { return ex.p(x, y + s, t); }, h);
      const double res = ft + ex.u(x, y, t) * fx + ex.v(x, y, t) * fy + px - nu * lap;
      worst = std::max(worst, std::abs(res));
    }
    const double div = d1([&](double s) { return ex.u(x + s, y, t); }, h) + d1([&](double s) { return ex.v(x, y + s, t); }, h);
    worst = std::max(worst, std::abs(div));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("compute_errors properties") {
  const ExactSolution ex = lattice_vortex(0.1);
  const Grid g = Grid::unit_square(16);
  State s{0.3, ex.sample_velocity(g, 0.3), ex.sample_pressure(g, 0.3), 1.0};
  ErrorReport e = compute_errors(s, ex);
  CHECK(e.e_u == 0.0);
  CHECK(e.e_p <= 1e-15);
  CHECK(e.e_Q == 0.0);
  CHECK(e.t == 0.3);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  VelocityField err(g);
  for (double& x : err.u_values()) x = U(rng);
  State s1 = s;
  s1.u += err;
  State s2 = s;
  s2.u += 2.0 * err;
  CHECK(compute_errors(s2, ex).e_u == doctest::Approx(2.0 * compute_errors(s1, ex).e_u).epsilon(1e-14));

  for (double& x : s1.p.values()) x += 0.1 * U(rng);
  State s3 = s1;
  for (double& x : s3.p.values()) x += 42.0;
  CHECK(compute_errors(s3, ex).e_p == doctest::Approx(compute_errors(s1, ex).e_p).epsilon(1e-12));

  s1.Q = 0.75;
  CHECK(compute_errors(s1, ex).e_Q == 0.25);
}

TEST_CASE("vortex initial state") {
  const ExactSolution ex = lattice_vortex(0.1);
  const Grid g = Grid::unit_square(32);
  const State s = vortex_initial_state(g, ex);
  CHECK(s.Q == 1.0);
  CHECK(s.t == 0.0);
  CHECK(divergence_inf(s.u) <= 1e-10);
  CHECK(std::abs(s.p.mean()) <= 1e-14);
  CHECK(norm_vel(s.u - ex.sample_velocity(g, 0.0)) <= 1e-10);
}

TEST_CASE("box vortex is solenoidal with no-slip walls") {
  for (int n : {8, 33}) {
    const Grid g = Grid::unit_square(n);
    const VelocityField w = box_vortex_velocity(g, 2.0);
    CHECK(divergence_inf(w) <= 1e-12 * n);
    for (int j = 0; j < n; ++j) CHECK(w.u(0, j) == 0.0);
    const double gs = grad_seminorm_vel(w, BoundaryTrace::zero(g));
    CHECK(std::isfinite(gs));
  }
  // max |u| is the amplitude times pi.
  const VelocityField w = box_vortex_velocity(Grid::unit_square(128));
  CHECK(w.max_abs() == doctest::Approx(pi).epsilon(2e-3));
}

TEST_CASE("rates and step counts") {
  CHECK(*observed_rate(4.0, 1.0) == doctest::Approx(2.0));
  CHECK_FALSE(observed_rate(0.0, 1.0).has_value());
  CHECK_FALSE(observed_rate(1.0, -1.0).has_value());
  CHECK(steps_to_reach(1.0, 1.0 / 256) == 256);
  CHECK(steps_to_reach(0.25, 0.25) == 1);
  CHECK(steps_to_reach(30.0, 0.002) == 15000);
  CHECK_THROWS_AS(steps_to_reach(1.0, 0.3), ContractViolation);

  RateTable t;
  t.rows.resize(3);
  t.rows[0].errors = {8.0, 4.0, 1.0, 1.0};
  t.rows[1].errors = {4.0, 1.0, 0.5, 1.0};
  t.rows[2].errors = {2.0, 0.25, 0.0, 1.0};
  assign_rates(t);
  CHECK_FALSE(t.rows[0].rate_u.has_value());
  CHECK(*t.rows[1].rate_u == doctest::Approx(1.0));
  CHECK(*t.rows[2].rate_p == doctest::Approx(2.0));
  CHECK(*t.rows[1].rate_Q == doctest::Approx(1.0));
  CHECK_FALSE(t.rows[2].rate_Q.has_value());
}

TEST_CASE("convergence study bookkeeping") {
  ConvergenceStudyConfig cfg;
  cfg.nx = 16;
  cfg.T = 0.25;
  SUBCASE("single step size gives empty rate columns") {
    cfg.taus = {0.125};
    const RateTable t = run_convergence_study(cfg);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].steps == 2);
    CHECK_FALSE(t.rows[0].failed);
    CHECK_FALSE(t.rows[0].rate_u.has_value());
    CHECK(t.rows[0].errors.t == 0.25);
  }
  SUBCASE("step sizes must halve") {
    cfg.taus = {0.125, 0.05};
    CHECK_THROWS_AS(run_convergence_study(cfg), ContractViolation);
    cfg.taus = {};
    CHECK_THROWS_AS(run_convergence_study(cfg), ContractViolation);
  }
  SUBCASE("parallel and serial studies agree bit for bit") {
    cfg.taus = {1.0 / 8, 1.0 / 16, 1.0 / 32};
    const RateTable a = run_convergence_study(cfg);
    cfg.parallel = false;
    const RateTable b = run_convergence_study(cfg);
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      CHECK(a.rows[k].errors.e_u == b.rows[k].errors.e_u);
      CHECK(a.rows[k].errors.e_p == b.rows[k].errors.e_p);
      CHECK(a.rows[k].errors.e_Q == b.rows[k].errors.e_Q);
    }
  }
  SUBCASE("failing rows are recorded, not thrown") {
    cfg.taus = {0.125, 0.0625};
    cfg.parallel = false;
    cfg.on_step = [](std::size_t row, const StepDiagnostics& d) {
      if (row == 1 && d.step == 2) throw std::runtime_error("injected failure");
    };
    const RateTable t = run_convergence_study(cfg);
    CHECK_FALSE(t.rows[0].failed);
    CHECK(t.rows[1].failed);
    CHECK(t.rows[1].failure == "injected failure");
    CHECK_FALSE(t.rows[1].rate_u.has_value());
  }
  SUBCASE("a failing initial projection fails the whole study") {
    cfg.taus = {0.125};
    cfg.solver.max_iter = 1;
    CHECK_THROWS_AS(run_convergence_study(cfg), SolverError);
  }
}

TEST_CASE("P-DRLM1 is first order in time on a coarse vortex study") {
  ConvergenceStudyConfig cfg;
  cfg.nx = 64;
  cfg.T = 0.5;
  cfg.taus = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  const RateTable t = run_convergence_study(cfg);
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    INFO("row " << k);
    REQUIRE(t.rows[k].rate_u.has_value());
    CHECK(*t.rows[k].rate_u >= 0.8);
    CHECK(*t.rows[k].rate_Q >= 0.8);
    CHECK(*t.rows[k].rate_p >= 0.8);
  }
  // Q tends to 1 as tau goes to 0.
  CHECK(t.rows.back().errors.e_Q < t.rows.front().errors.e_Q);
}

TEST_CASE("centerline interpolation") {
  const Grid g = Grid::unit_square(10);
  // A bilinear field is reproduced exactly, walls included.
  auto fu = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y; };
  auto fv = [](double x, double y) { return -0.5 + x + 4.0 * y - x * y; };
  const VelocityField w = sample_velocity(g, fu, fv);
  const BoundaryTrace tr = BoundaryTrace::sample(g, fu, fv);
  for (double x : {0.0, 0.13, 0.5, 0.77, 1.0})
    for (double y : {0.0, 0.04, 0.5, 0.96, 1.0}) {
      CHECK(interpolate_u(w, tr, x, y) == doctest::Approx(fu(x, y)).epsilon(1e-13));
      CHECK(interpolate_v(w, tr, x, y) == doctest::Approx(fv(x, y)).epsilon(1e-13));
    }

  const auto ys = native_stations_y(g);
  REQUIRE(ys.size() == 12u);
  CHECK(ys.front() == 0.0);
  CHECK(ys.back() == 1.0);
  for (std::size_t k = 1; k < ys.size(); ++k) CHECK(ys[k] > ys[k - 1]);

  const CenterlineProfile pu = centerline_u(w, tr, ys);
  CHECK(pu.component == "u");
  for (std::size_t k = 0; k < ys.size(); ++k) CHECK(pu.value[k] == doctest::Approx(fu(0.5, ys[k])).epsilon(1e-13));
  const auto xs = native_stations_x(g);
  const CenterlineProfile pv = centerline_v(w, tr, xs);
  CHECK(pv.component == "v");
  for (std::size_t k = 0; k < xs.size(); ++k) CHECK(pv.value[k] == doctest::Approx(fv(xs[k], 0.5)).epsilon(1e-13));

  CenterlineProfile p = pu;
  p.reference = p.value;
  p.reference[3] += 0.25;
  CHECK(p.max_abs_deviation() == doctest::Approx(0.25));
}

TEST_CASE("plateau detector") {
  CHECK_THROWS_AS(PlateauDetector(0.1, 0.05), ContractViolation);
  SUBCASE("fires on a settled signal") {
    const double tau = 0.01;
    PlateauDetector det(tau, 1.0, 1e-4);
    std::optional<double> fired;
    for (int n = 1; n <= 3000; ++n) {
      const double t = n * tau;
      if (det.observe(t, 2.0 + std::exp(-t))) {
        fired = det.fired_at();
        break;
      }
    }
    REQUIRE(fired.has_value());
    // |E(t) - E(t-1)| / E = (e - 1) e^{-t} / (2 + e^{-t}) <= 1e-4 first at t = 9.06.
    const double expected = -std::log(2e-4 / (std::exp(1.0) - 1.0 - 1e-4));
    CHECK(*fired >= expected);
    CHECK(*fired < expected + tau);
  }
  SUBCASE("does not fire on a steady ramp") {
    PlateauDetector det(0.01, 1.0, 1e-4);
    for (int n = 1; n <= 1000; ++n) CHECK_FALSE(det.observe(n * 0.01, 1.0 + 0.01 * n));
    CHECK(det.last_rate() > 1e-4);
  }
}

TEST_CASE("short cavity run") {
  CavityConfig cfg;
  cfg.Re = 100.0;
  cfg.nx = 16;
  cfg.tau = 0.01;
  cfg.T = 0.2;
  cfg.snapshot_times = {0.0, 0.1};
  int snapshots = 0;
  long steps_seen = 0;
  double first_norm = 0.0;
  double worst_div = 0.0;
  cfg.on_snapshot = [&](const State&) { ++snapshots; };
  cfg.on_step = [&](const StepDiagnostics& d) {
    if (d.step == 1) first_norm = d.norm_u;
    worst_div = std::max(worst_div, d.div_inf);
    ++steps_seen;
  };
  const CavityResult r = run_cavity(cfg);
  CHECK(r.steps == 20);
  CHECK(steps_seen == 20);
  CHECK(snapshots == 2);
  CHECK(first_norm > 0.0);
  CHECK(worst_div <= 1e-7);
  CHECK(r.final_state.t == doctest::Approx(0.2).epsilon(1e-15));
  // The lid value closes the profile at y = 1; the flow under the lid follows it.
  CHECK(r.u_centerline.value.back() == 1.0);
  CHECK(r.u_centerline.value.front() == 0.0);
  CHECK(r.u_centerline.value[r.u_centerline.value.size() - 2] > 0.0);
  CHECK_FALSE(r.plateau_time.has_value());
}

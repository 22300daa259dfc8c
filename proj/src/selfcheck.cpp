#include "drlm/selfcheck.hpp"

#include <algorithm>
#include <cmath>

#include "drlm/convection.hpp"
#include "drlm/operators.hpp"
#include "drlm/solvers.hpp"

namespace drlm {

int SelfCheckReport::passed() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); }));
}

int SelfCheckReport::failed() const { return static_cast<int>(checks.size()) - passed(); }

VelocityField random_velocity(const Grid& grid, std::mt19937_64& rng, bool zero_boundary) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VelocityField out(grid);
  for (double& x : out.u_values()) x = dist(rng);
  for (double& x : out.v_values()) x = dist(rng);
  if (zero_boundary) out.clear_boundary();
  return out;
}

ScalarField random_scalar(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField out(grid);
  for (double& x : out.values()) x = dist(rng);
  return out;
}

BoundaryTrace random_trace(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  BoundaryTrace t = BoundaryTrace::zero(grid);
  for (auto* edge : {&t.u_left, &t.u_right, &t.v_bottom, &t.v_top, &t.u_bottom, &t.u_top, &t.v_left, &t.v_right})
    for (double& x : *edge) x = dist(rng);
  return t;
}

namespace {

double rel(double residual, double scale) { return residual / std::max(scale, 1e-300); }

double max_diff(const VelocityField& a, const VelocityField& b) { return (a - b).max_abs(); }
double max_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

void check_grid(SelfCheckReport& rep, const Grid& g, std::mt19937_64& rng) {
  const std::string tag = " [" + std::to_string(g.nx()) + "x" + std::to_string(g.ny()) + "]";
  auto add = [&](const std::string& name, double residual, double tol) {
    rep.checks.push_back({name + tag, residual, tol});
  };
  const BoundaryTrace zero = BoundaryTrace::zero(g);

  {
    const ScalarField s = random_scalar(g, rng);
    const VelocityField w = random_velocity(g, rng, true);
    const double lhs = inner_vel(gradient(s), w);
    const double rhs = -inner_cell(s, divergence(w));
    add("div/grad duality", rel(std::abs(lhs - rhs), norm_vel(gradient(s)) * norm_vel(w)), 1e-13);
  }
  {
    ScalarField c(g);
    for (double& x : c.values()) x = 3.25;
    add("gradient of constant (abs)", gradient(c).max_abs(), 0.0);
  }
  {
    const ScalarField s = random_scalar(g, rng);
    const ScalarField a = apply_neumann_laplacian(s);
    ScalarField b = divergence(gradient(s));
    b *= -1.0;
    add("div(grad) equals Neumann Laplacian", rel(max_diff(a, b), a.max_abs()), 1e-14);
    ScalarField ones(g);
    for (double& x : ones.values()) x = 1.0;
    add("Neumann Laplacian row sums (abs)", apply_neumann_laplacian(ones).max_abs(), 1e-12);
  }
  {
    const VelocityField v = random_velocity(g, rng, true);
    const VelocityField w = random_velocity(g, rng, true);
    const double a = inner_vel(laplacian_velocity(v, zero), w);
    const double b = inner_vel(v, laplacian_velocity(w, zero));
    add("velocity Laplacian symmetry", rel(std::abs(a - b), std::abs(a) + std::abs(b)), 1e-13);
    const double lhs = -inner_vel(laplacian_velocity(v, zero), v);
    const double gs = grad_seminorm_vel(v, zero);
    add("summation by parts (-Lv, v) = |grad v|^2", rel(std::abs(lhs - gs * gs), gs * gs), 1e-12);
  }
  {
    const double a = 0.7, b = -1.3;
    const VelocityField x = random_velocity(g, rng), y = random_velocity(g, rng);
    const ScalarField s = random_scalar(g, rng), r = random_scalar(g, rng);
    const BoundaryTrace tx = random_trace(g, rng), ty = random_trace(g, rng);
    VelocityField xy = a * x;
    xy.axpy(b, y);
    ScalarField sr = a * s;
    sr.axpy(b, r);
    const BoundaryTrace txy = tx.combined(a, ty, b);

    ScalarField d = a * divergence(x);
    d.axpy(b, divergence(y));
    add("divergence linearity", rel(max_diff(divergence(xy), d), d.max_abs()), 1e-13);
    VelocityField gr = a * gradient(s);
    gr.axpy(b, gradient(r));
    add("gradient linearity", rel(max_diff(gradient(sr), gr), gr.max_abs()), 1e-13);
    VelocityField lap = a * laplacian_velocity(x, tx);
    lap.axpy(b, laplacian_velocity(y, ty));
    add("Laplacian linearity", rel(max_diff(laplacian_velocity(xy, txy), lap), lap.max_abs()), 1e-13);

    const VelocityField u = random_velocity(g, rng);
    VelocityField adv = a * advect(u, x, tx);
    adv.axpy(b, advect(u, y, ty));
    add("advection linearity in advected field", rel(max_diff(advect(u, xy, txy), adv), adv.max_abs()), 1e-13);
    VelocityField adv2 = a * advect(x, u, tx);
    adv2.axpy(b, advect(y, u, tx));
    add("advection linearity in advecting field", rel(max_diff(advect(xy, u, tx), adv2), adv2.max_abs()), 1e-13);
  }
  {
    const ScalarField s = random_scalar(g, rng);
    const VelocityField w = random_velocity(g, rng, true);
    const double a = grad_inner_pressure(s, s);
    const double n = grad_norm_pressure(s);
    add("pressure gradient norm consistency", rel(std::abs(a - n * n), a), 1e-14);
    const double gw = grad_inner_vel(w, zero, w, zero);
    const double gn = grad_seminorm_vel(w, zero);
    add("velocity gradient norm consistency", rel(std::abs(gw - gn * gn), gw), 1e-14);
  }
  {
    SolverConfig cfg;
    const VelocityField rhs = random_velocity(g, rng);
    const BoundaryTrace bc = random_trace(g, rng);
    const double alpha = 3.0, nu = 0.05;
    auto sol = helmholtz_solve(alpha, nu, rhs, bc, cfg);
    VelocityField res = apply_helmholtz(alpha, nu, sol.x, bc);
    VelocityField r = rhs;
    r.clear_boundary();
    res -= r;
    res.clear_boundary();
    double sq = 0.0;
    for (double x : res.u_values()) sq += x * x;
    for (double x : res.v_values()) sq += x * x;
    add("Helmholtz residual contract", rel(std::sqrt(sq), sol.report.rhs_norm), 1.01 * cfg.rel_tol);

    const ScalarField prhs = random_scalar(g, rng);
    auto phi = poisson_neumann_solve(prhs, cfg);
    ScalarField centered = prhs;
    centered.remove_mean();
    ScalarField pres = apply_neumann_laplacian(phi.x) - centered;
    double psq = 0.0;
    for (double x : pres.values()) psq += x * x;
    add("Neumann Poisson residual contract", rel(std::sqrt(psq), phi.report.rhs_norm), 1.01 * cfg.rel_tol);
    add("Neumann solution zero mean (abs)", std::abs(phi.x.mean()), 1e-12 * std::max(1.0, phi.x.max_abs()));
  }
}

}  // namespace

SelfCheckReport run_operator_identities(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SelfCheckReport rep;
  for (const Grid& g : {Grid(4, 4), Grid(7, 5), Grid(16, 16), Grid(12, 20, 0.0, 2.0, -1.0, 0.5)}) check_grid(rep, g, rng);
  return rep;
}

}  // namespace drlm

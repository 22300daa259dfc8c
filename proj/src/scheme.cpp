#include "drlm/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "drlm/convection.hpp"
#include "drlm/operators.hpp"

namespace drlm {

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::pdrlm1: return "pdrlm1";
    case SchemeKind::pdrlm2: return "pdrlm2";
    case SchemeKind::baseline_pc: return "baseline_pc";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "pdrlm1") return SchemeKind::pdrlm1;
  if (name == "pdrlm2") return SchemeKind::pdrlm2;
  if (name == "baseline_pc" || name == "baseline") return SchemeKind::baseline_pc;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "' (expected pdrlm1, pdrlm2 or baseline_pc)");
}

void SchemeConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ContractViolation("SchemeConfig: tau must be positive");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ContractViolation("SchemeConfig: theta must be positive");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ContractViolation("SchemeConfig: nu must be positive");
  if (!(invariant_rel_tol > 0.0)) throw ContractViolation("SchemeConfig: invariant_rel_tol must be positive");
  solver.validate();
}

State State::zero(const Grid& grid, double t) { return State{t, VelocityField(grid), ScalarField(grid), 1.0}; }

BoundaryTrace FlowInputs::trace(const Grid& grid, double t) const {
  if (!boundary) return BoundaryTrace::zero(grid);
  BoundaryTrace tr = boundary(t);
  if (!tr.matches(grid)) throw ContractViolation("FlowInputs: boundary trace does not match grid");
  return tr;
}

StepWorkspace::StepWorkspace(const Grid& grid)
    : u_hat1(grid), u_hat2(grid), u1(grid), u2(grid), p1(grid), p2(grid), u_hat(grid), phi1(grid), phi2(grid) {}

int StepDiagnostics::cg_iters_total() const {
  int total = 0;
  for (const auto& r : solver_reports) total += r.iterations;
  return total;
}

double StepDiagnostics::residual(const std::string& name) const {
  auto it = identity_residuals.find(name);
  return it == identity_residuals.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

double solve_multiplier_quadratic(double A, double B, double C, double q_prev) {
  if (!(A > 0.0) || !std::isfinite(A)) throw ContractViolation("solve_multiplier_quadratic: A must be positive");
  if (!std::isfinite(B) || !std::isfinite(C))
    throw MultiplierError("solve_multiplier_quadratic: non-finite coefficients");
  const double disc = B * B - 4.0 * A * C;
  if (C < 0.0) {
    // Roots have product C/A < 0, so exactly one is positive.
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    const double root = std::max(q / A, C / q);
    if (!(root > 0.0))
      throw MultiplierError("solve_multiplier_quadratic: no positive root although C < 0 (assembly error)");
    return root;
  }
  if (disc < 0.0) {
    std::ostringstream msg;
    msg << "solve_multiplier_quadratic: negative discriminant " << disc << " with C = " << C << " >= 0";
    throw MultiplierError(msg.str());
  }
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  if (q == 0.0) return 0.0;  // B = C = 0: double root at 0
  const double r1 = q / A, r2 = C / q;
  return std::abs(r1 - q_prev) <= std::abs(r2 - q_prev) ? r1 : r2;
}

double energy_K(const VelocityField& u, const ScalarField& p, double tau) {
  const double gp = grad_norm_pressure(p);
  return 0.5 * (inner_vel(u, u) + tau * tau * gp * gp);
}

double energy_modified(double K, double Q, double theta) { return K + theta * (Q * Q - 1.0); }

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

SolveReport stripped(SolveReport r) {
  r.residual_history.clear();
  r.residual_history.shrink_to_fit();
  return r;
}

/// One Q-independent branch: Helmholtz predictor, then projection
///   -Lap(phi) = -div(u_hat) / s,   u = u_hat - s grad(phi).
struct Branch {
  VelocityField u_hat;
  VelocityField u;
  ScalarField phi;
  SolveReport helmholtz_report;
  SolveReport poisson_report;
};

Branch solve_branch(double alpha, double nu, const VelocityField& rhs, const BoundaryTrace& trace, double s,
                    const SolverConfig& cfg, const VelocityField* guess_u_hat, const ScalarField* guess_phi) {
  auto helm = helmholtz_solve(alpha, nu, rhs, trace, cfg, guess_u_hat);
  ScalarField div_rhs = divergence(helm.x);
  div_rhs *= -1.0 / s;
  auto proj = poisson_neumann_solve(div_rhs, cfg, guess_phi);
  VelocityField u = helm.x;
  u.axpy(-s, gradient(proj.x));
  return Branch{std::move(helm.x), std::move(u), std::move(proj.x), stripped(std::move(helm.report)),
                stripped(std::move(proj.report))};
}

/// Runs the two branches; the second on a worker thread. Both are sequential
/// internally, so the result does not depend on scheduling.
std::pair<Branch, Branch> solve_branches(double alpha, double nu, const VelocityField& rhs1,
                                         const BoundaryTrace& trace1, const VelocityField& rhs2,
                                         const BoundaryTrace& trace2, double s, const SolverConfig& cfg,
                                         const StepWorkspace* ws) {
  const bool warm = ws && ws->has_history;
  auto second = std::async(std::launch::async, [&] {
    return solve_branch(alpha, nu, rhs2, trace2, s, cfg, warm ? &ws->u_hat2 : nullptr, warm ? &ws->phi2 : nullptr);
  });
  Branch first = [&] {
    try {
      return solve_branch(alpha, nu, rhs1, trace1, s, cfg, warm ? &ws->u_hat1 : nullptr, warm ? &ws->phi1 : nullptr);
    } catch (...) {
      second.wait();
      throw;
    }
  }();
  return {std::move(first), second.get()};
}

bool energy_premises(const FlowInputs& inputs, const BoundaryTrace& a, const BoundaryTrace& b) {
  return inputs.unforced() && a.is_homogeneous() && b.is_homogeneous();
}

double relative_to(double residual, double scale) {
  return scale > 0.0 ? residual / scale : residual;
}

void check(bool ok, const std::string& what, const StepDiagnostics& diag) {
  if (!ok) throw StepFailure("invariant violated: " + what, diag);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

/// Checks shared by all schemes.
void check_common(const SchemeConfig& cfg, const State& next, const StepDiagnostics& d, double proj_scale) {
  const double tol = cfg.invariant_rel_tol;
  check(next.u.all_finite() && next.p.all_finite() && std::isfinite(next.Q), "non-finite state", d);
  const Grid& g = next.grid();
  const double div_bound = tol * std::max(1.0, next.u.max_abs() / std::min(g.hx(), g.hy()));
  check(d.div_inf <= div_bound, "divergence " + fmt(d.div_inf) + " exceeds " + fmt(div_bound), d);
  const double proj = d.residual("proj1");
  check(proj <= tol * proj_scale, "projection identity residual " + fmt(proj) + " (scale " + fmt(proj_scale) + ")", d);
}

VelocityField forcing_at(const FlowInputs& inputs, const Grid& grid, double t) {
  if (!inputs.forcing) return VelocityField(grid);
  VelocityField f = inputs.forcing(t);
  require_same_grid(grid, f.grid(), "forcing");
  return f;
}

void require_state(const State& s, const char* where) {
  if (!(s.p.grid() == s.u.grid())) throw ContractViolation(std::string(where) + ": u and p grids differ");
  if (!s.u.all_finite() || !s.p.all_finite() || !std::isfinite(s.Q))
    throw ContractViolation(std::string(where) + ": non-finite state");
}

}  // namespace

// ---------------------------------------------------------------------------
// P-DRLM1

StepResult step_pdrlm1(const State& sn, const SchemeConfig& cfg, const FlowInputs& inputs, StepWorkspace* ws) {
  cfg.validate();
  require_state(sn, "step_pdrlm1");
  const Grid& g = sn.grid();
  const double tau = cfg.tau, nu = cfg.nu, theta = cfg.theta;
  const double t_next = sn.t + tau;

  StepDiagnostics d;
  d.t = t_next;
  d.quad.A = d.quad.B = d.quad.C = d.quad.C_crosscheck = d.quad.discriminant = nan_value;

  try {
    const BoundaryTrace g_now = inputs.trace(g, sn.t);
    const BoundaryTrace g_next = inputs.trace(g, t_next);
    const BoundaryTrace g_zero = BoundaryTrace::zero(g);
    d.energy_premises = energy_premises(inputs, g_now, g_next);

    // Branch 1: (u_hat1 - u^n)/tau + grad p^n - nu Lap u_hat1 = f^{n+1}, full Dirichlet data.
    VelocityField rhs1 = (1.0 / tau) * sn.u;
    rhs1 -= gradient(sn.p);
    rhs1 += forcing_at(inputs, g, t_next);
    // Branch 2: u_hat2/tau + N(u^n)u^n - nu Lap u_hat2 = 0, homogeneous data.
    VelocityField rhs2 = cfg.convection ? -1.0 * convect(sn.u, g_now) : VelocityField(g);

    auto [b1, b2] = solve_branches(1.0 / tau, nu, rhs1, g_next, rhs2, g_zero, tau, cfg.solver, ws);
    d.solver_reports = {b1.helmholtz_report, b2.helmholtz_report, b1.poisson_report, b2.poisson_report};

    ScalarField p1 = sn.p + b1.phi;
    p1.remove_mean();
    const ScalarField& p2 = b2.phi;

    const double tau2 = tau * tau;
    const double un2 = inner_vel(sn.u, sn.u);
    const double gpn = grad_norm_pressure(sn.p);
    const double gp1 = grad_norm_pressure(p1);
    const double gp2 = grad_norm_pressure(p2);
    const double guh1 = grad_inner_vel(b1.u_hat, g_next, b1.u_hat, g_next);
    const double guh2 = grad_inner_vel(b2.u_hat, g_zero, b2.u_hat, g_zero);
    const double guh12 = grad_inner_vel(b1.u_hat, g_next, b2.u_hat, g_zero);

    QuadraticCoefficients& q = d.quad;
    q.A = inner_vel(b2.u, b2.u) + 2.0 * theta + tau2 * gp2 * gp2 + 2.0 * tau * nu * guh2;
    q.B = 2.0 * inner_vel(b1.u, b2.u) + 2.0 * tau2 * grad_inner_pressure(p1, p2) + 4.0 * nu * tau * guh12;
    q.C = inner_vel(b1.u, b1.u) - un2 + tau2 * gp1 * gp1 - tau2 * gpn * gpn - 2.0 * theta * sn.Q * sn.Q +
          2.0 * tau * nu * guh1;
    const VelocityField jump = b1.u_hat - sn.u;
    q.C_crosscheck = -inner_vel(jump, jump) - 2.0 * theta * sn.Q * sn.Q;
    q.discriminant = q.B * q.B - 4.0 * q.A * q.C;
    d.identity_residuals["crosscheck"] = std::abs(q.C - q.C_crosscheck);

    const VelocityField corr1 = b1.u - b1.u_hat;
    const double gphi1 = grad_norm_pressure(b1.phi);
    const double corr1_sq = inner_vel(corr1, corr1);
    d.identity_residuals["proj1"] = std::abs(corr1_sq - tau2 * gphi1 * gphi1);
    d.proj1_scale = std::max(corr1_sq, tau2 * gphi1 * gphi1);

    if (cfg.assert_invariants) check(q.A > 0.0, "A = " + fmt(q.A) + " is not positive", d);
    const double Q = solve_multiplier_quadratic(q.A, q.B, q.C, sn.Q);

    State next{t_next, b1.u, p1, Q};
    next.u.axpy(Q, b2.u);
    next.p.axpy(Q, p2);
    next.p.remove_mean();
    VelocityField u_hat = b1.u_hat;
    u_hat.axpy(Q, b2.u_hat);

    const double Kn = energy_K(sn.u, sn.p, tau);
    d.Q = Q;
    d.K = energy_K(next.u, next.p, tau);
    d.E_mod = energy_modified(d.K, Q, theta);
    d.stability_energy = d.E_mod;
    d.norm_u = norm_vel(next.u);
    d.dissipation = nu * tau * grad_inner_vel(u_hat, g_next, u_hat, g_next);
    d.div_inf = divergence_inf(next.u);
    d.u_inf = next.u.max_abs();
    const double before = Kn + theta * sn.Q * sn.Q;
    const double after = d.K + theta * Q * Q;
    d.identity_residuals["energy"] = std::abs(after - before + d.dissipation);

    if (cfg.assert_invariants) {
      const double tol = cfg.invariant_rel_tol;
      check_common(cfg, next, d, d.proj1_scale);
      if (d.energy_premises) {
        const double scale = std::max(before, after);
        check(q.C < 0.0, "C = " + fmt(q.C) + " is not negative", d);
        check(d.identity_residuals["crosscheck"] <= tol * (std::abs(q.C) + 2.0 * theta),
              "C cross-check residual " + fmt(d.identity_residuals["crosscheck"]), d);
        check(Q > 0.0, "Q = " + fmt(Q) + " is not positive", d);
        check(d.identity_residuals["energy"] <= tol * scale,
              "energy balance residual " + fmt(relative_to(d.identity_residuals["energy"], scale)) + " (relative)", d);
        check(after <= before + tol * scale, "modified energy increased", d);
      }
    }

    if (ws) {
      ws->u_hat1 = std::move(b1.u_hat);
      ws->u_hat2 = std::move(b2.u_hat);
      ws->u1 = std::move(b1.u);
      ws->u2 = std::move(b2.u);
      ws->p1 = std::move(p1);
      ws->p2 = p2;
      ws->phi1 = std::move(b1.phi);
      ws->phi2 = std::move(b2.phi);
      ws->u_hat = std::move(u_hat);
      ws->has_history = true;
    }
    return {std::move(next), std::move(d)};
  } catch (const StepFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StepFailure(std::string("pdrlm1 step to t=") + fmt(t_next) + " failed: " + e.what(), d);
  }
}

// ---------------------------------------------------------------------------
// P-DRLM2

StepResult step_pdrlm2(const State& sn, const State& snm1, const SchemeConfig& cfg, const FlowInputs& inputs,
                       StepWorkspace* ws) {
  cfg.validate();
  require_state(sn, "step_pdrlm2");
  require_state(snm1, "step_pdrlm2");
  require_same_grid(sn.grid(), snm1.grid(), "step_pdrlm2");
  const Grid& g = sn.grid();
  const double tau = cfg.tau, nu = cfg.nu, theta = cfg.theta;
  const double t_next = sn.t + tau;
  const double s = 2.0 * tau / 3.0;

  StepDiagnostics d;
  d.t = t_next;
  d.quad.A = d.quad.B = d.quad.C = d.quad.C_crosscheck = d.quad.discriminant = nan_value;

  try {
    const BoundaryTrace g_prev = inputs.trace(g, snm1.t);
    const BoundaryTrace g_now = inputs.trace(g, sn.t);
    const BoundaryTrace g_next = inputs.trace(g, t_next);
    const BoundaryTrace g_zero = BoundaryTrace::zero(g);
    d.energy_premises = energy_premises(inputs, g_now, g_next) && g_prev.is_homogeneous();

    // (3 u_hat - 4 u^n + u^{n-1})/(2 tau) + Q N(u~)u~ + grad p^n - nu Lap u_hat = f^{n+1}
    VelocityField rhs1 = (2.0 / tau) * sn.u;
    rhs1.axpy(-0.5 / tau, snm1.u);
    rhs1 -= gradient(sn.p);
    rhs1 += forcing_at(inputs, g, t_next);
    VelocityField rhs2(g);
    if (cfg.convection) {
      VelocityField u_tilde = 2.0 * sn.u;
      u_tilde -= snm1.u;
      rhs2 = -1.0 * convect(u_tilde, g_now.combined(2.0, g_prev, -1.0));
    }

    auto [b1, b2] = solve_branches(1.0 / s, nu, rhs1, g_next, rhs2, g_zero, s, cfg.solver, ws);
    d.solver_reports = {b1.helmholtz_report, b2.helmholtz_report, b1.poisson_report, b2.poisson_report};

    // Rotational correction: p^{n+1} = p^n + phi - nu div(u_hat).
    ScalarField p1 = sn.p + b1.phi;
    p1.axpy(-nu, divergence(b1.u_hat));
    p1.remove_mean();
    ScalarField p2 = b2.phi;
    p2.axpy(-nu, divergence(b2.u_hat));
    p2.remove_mean();

    // 3K(Q) - 4K^n + K^{n-1} + theta (3Q^2 - 4Q_n^2 + Q_{n-1}^2) + 2 nu tau ||grad u_hat(Q)||^2 = 0
    const double tau2 = tau * tau;
    const double Kn = energy_K(sn.u, sn.p, tau);
    const double Knm1 = energy_K(snm1.u, snm1.p, tau);
    const double gp1 = grad_norm_pressure(p1);
    const double gp2 = grad_norm_pressure(p2);
    const double guh1 = grad_inner_vel(b1.u_hat, g_next, b1.u_hat, g_next);
    const double guh2 = grad_inner_vel(b2.u_hat, g_zero, b2.u_hat, g_zero);
    const double guh12 = grad_inner_vel(b1.u_hat, g_next, b2.u_hat, g_zero);
    const double qn2 = sn.Q * sn.Q, qnm12 = snm1.Q * snm1.Q;

    QuadraticCoefficients& q = d.quad;
    q.A = 1.5 * (inner_vel(b2.u, b2.u) + tau2 * gp2 * gp2) + 3.0 * theta + 2.0 * tau * nu * guh2;
    q.B = 3.0 * (inner_vel(b1.u, b2.u) + tau2 * grad_inner_pressure(p1, p2)) + 4.0 * tau * nu * guh12;
    q.C = 1.5 * (inner_vel(b1.u, b1.u) + tau2 * gp1 * gp1) - 4.0 * Kn + Knm1 - 4.0 * theta * qn2 +
          theta * qnm12 + 2.0 * tau * nu * guh1;
    q.discriminant = q.B * q.B - 4.0 * q.A * q.C;

    const VelocityField corr1 = b1.u - b1.u_hat;
    const double gphi1 = grad_norm_pressure(b1.phi);
    const double corr1_sq = inner_vel(corr1, corr1);
    d.identity_residuals["proj1"] = std::abs(corr1_sq - s * s * gphi1 * gphi1);
    d.proj1_scale = std::max(corr1_sq, s * s * gphi1 * gphi1);

    if (cfg.assert_invariants) check(q.A > 0.0, "A = " + fmt(q.A) + " is not positive", d);
    const double Q = solve_multiplier_quadratic(q.A, q.B, q.C, sn.Q);

    State next{t_next, b1.u, p1, Q};
    next.u.axpy(Q, b2.u);
    next.p.axpy(Q, p2);
    next.p.remove_mean();
    VelocityField u_hat = b1.u_hat;
    u_hat.axpy(Q, b2.u_hat);

    d.Q = Q;
    d.K = energy_K(next.u, next.p, tau);
    d.E_mod = energy_modified(d.K, Q, theta);
    d.stability_energy = 0.5 * (3.0 * d.K - Kn) + theta * (1.5 * Q * Q - 0.5 * qn2 - 1.0);
    d.norm_u = norm_vel(next.u);
    d.dissipation = nu * tau * grad_inner_vel(u_hat, g_next, u_hat, g_next);
    d.div_inf = divergence_inf(next.u);
    d.u_inf = next.u.max_abs();
    const double balance = 3.0 * d.K - 4.0 * Kn + Knm1 + theta * (3.0 * Q * Q - 4.0 * qn2 + qnm12) + 2.0 * d.dissipation;
    d.identity_residuals["energy"] = std::abs(balance);

    if (cfg.assert_invariants) {
      const double tol = cfg.invariant_rel_tol;
      check_common(cfg, next, d, d.proj1_scale);
      if (d.energy_premises) {
        const double stab_prev = 0.5 * (3.0 * Kn - Knm1) + theta * (1.5 * qn2 - 0.5 * qnm12 - 1.0);
        const double scale = 3.0 * (Kn + d.K) + Knm1 + theta * (3.0 * Q * Q + 4.0 * qn2 + qnm12);
        check(d.identity_residuals["energy"] <= tol * scale, "BDF2 energy balance residual", d);
        check(d.stability_energy <= stab_prev + tol * scale, "BDF2 stability energy increased", d);
      }
    }

    if (ws) {
      ws->u_hat1 = std::move(b1.u_hat);
      ws->u_hat2 = std::move(b2.u_hat);
      ws->u1 = std::move(b1.u);
      ws->u2 = std::move(b2.u);
      ws->p1 = std::move(p1);
      ws->p2 = std::move(p2);
      ws->phi1 = std::move(b1.phi);
      ws->phi2 = std::move(b2.phi);
      ws->u_hat = std::move(u_hat);
      ws->has_history = true;
    }
    return {std::move(next), std::move(d)};
  } catch (const StepFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StepFailure(std::string("pdrlm2 step to t=") + fmt(t_next) + " failed: " + e.what(), d);
  }
}

// ---------------------------------------------------------------------------
// Baseline incremental pressure correction

StepResult step_baseline_pc(const State& sn, const SchemeConfig& cfg, const FlowInputs& inputs, StepWorkspace* ws) {
  cfg.validate();
  require_state(sn, "step_baseline_pc");
  const Grid& g = sn.grid();
  const double tau = cfg.tau, nu = cfg.nu;
  const double t_next = sn.t + tau;

  StepDiagnostics d;
  d.t = t_next;
  d.quad.A = d.quad.B = d.quad.C = d.quad.C_crosscheck = d.quad.discriminant = nan_value;

  try {
    const BoundaryTrace g_now = inputs.trace(g, sn.t);
    const BoundaryTrace g_next = inputs.trace(g, t_next);
    d.energy_premises = energy_premises(inputs, g_now, g_next);

    VelocityField rhs = (1.0 / tau) * sn.u;
    rhs -= gradient(sn.p);
    if (cfg.convection) rhs -= convect(sn.u, g_now);
    rhs += forcing_at(inputs, g, t_next);

    const bool warm = ws && ws->has_history;
    Branch b = solve_branch(1.0 / tau, nu, rhs, g_next, tau, cfg.solver, warm ? &ws->u_hat1 : nullptr,
                            warm ? &ws->phi1 : nullptr);
    d.solver_reports = {b.helmholtz_report, b.poisson_report};

    State next{t_next, b.u, sn.p + b.phi, 1.0};
    next.p.remove_mean();

    const double Kn = energy_K(sn.u, sn.p, tau);
    d.Q = 1.0;
    d.K = energy_K(next.u, next.p, tau);
    d.E_mod = d.K;
    d.stability_energy = d.K;
    d.norm_u = norm_vel(next.u);
    d.dissipation = nu * tau * grad_inner_vel(b.u_hat, g_next, b.u_hat, g_next);
    d.div_inf = divergence_inf(next.u);
    d.u_inf = next.u.max_abs();
    const VelocityField jump = b.u_hat - sn.u;
    // K^{n+1} - K^n = -nu tau ||grad u_hat||^2 - ||u_hat - u^n||^2 / 2
    d.identity_residuals["energy"] = std::abs(d.K - Kn + d.dissipation + 0.5 * inner_vel(jump, jump));
    const VelocityField corr = b.u - b.u_hat;
    const double gphi = grad_norm_pressure(b.phi);
    const double corr_sq = inner_vel(corr, corr);
    d.identity_residuals["proj1"] = std::abs(corr_sq - tau * tau * gphi * gphi);
    d.proj1_scale = std::max(corr_sq, tau * tau * gphi * gphi);

    if (cfg.assert_invariants) {
      check_common(cfg, next, d, d.proj1_scale);
      if (d.energy_premises && !cfg.convection) {
        const double scale = std::max(Kn, d.K);
        check(d.identity_residuals["energy"] <= cfg.invariant_rel_tol * scale, "baseline energy law residual", d);
      }
    }

    if (ws) {
      ws->u_hat1 = b.u_hat;
      ws->u1 = std::move(b.u);
      ws->p1 = next.p;
      ws->phi1 = std::move(b.phi);
      ws->u_hat = std::move(b.u_hat);
      ws->has_history = true;
    }
    return {std::move(next), std::move(d)};
  } catch (const StepFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StepFailure(std::string("baseline step to t=") + fmt(t_next) + " failed: " + e.what(), d);
  }
}

// ---------------------------------------------------------------------------
// Integrator

Integrator::Integrator(SchemeConfig cfg, FlowInputs inputs, State initial)
    : cfg_(std::move(cfg)),
      inputs_(std::move(inputs)),
      current_(std::move(initial)),
      t0_(current_.t),
      workspace_(current_.grid()) {
  cfg_.validate();
  require_state(current_, "Integrator");
}

const StepResult& Integrator::advance() {
  StepResult result = [&]() -> StepResult {
    try {
      return step_once();
    } catch (const StepFailure& failure) {
      StepDiagnostics d = failure.diagnostics();
      d.step = steps_ + 1;
      throw StepFailure(failure.what(), std::move(d));
    }
  }();
  ++steps_;
  // Time as t0 + n tau rather than a running sum, so that T is hit exactly.
  result.state.t = t0_ + static_cast<double>(steps_) * cfg_.tau;
  result.diagnostics.t = result.state.t;
  result.diagnostics.step = steps_;
  previous_ = std::move(current_);
  current_ = result.state;
  last_ = std::move(result);
  return *last_;
}

StepResult Integrator::step_once() {
  switch (cfg_.kind) {
    case SchemeKind::pdrlm1: return step_pdrlm1(current_, cfg_, inputs_, &workspace_);
    case SchemeKind::baseline_pc: return step_baseline_pc(current_, cfg_, inputs_, &workspace_);
    case SchemeKind::pdrlm2: {
      if (previous_) return step_pdrlm2(current_, *previous_, cfg_, inputs_, &workspace_);
      // Bootstrap: one first-order step, then Q^1 = 1.
      StepResult first = step_pdrlm1(current_, cfg_, inputs_, &workspace_);
      first.state.Q = 1.0;
      auto& d = first.diagnostics;
      d.Q = 1.0;
      d.E_mod = energy_modified(d.K, 1.0, cfg_.theta);
      d.stability_energy = 0.5 * (3.0 * d.K - energy_K(current_.u, current_.p, cfg_.tau)) +
                           cfg_.theta * (1.5 - 0.5 * current_.Q * current_.Q - 1.0);
      return first;
    }
  }
  throw ContractViolation("Integrator: unknown scheme");
}

const StepResult& Integrator::last() const {
  if (!last_) throw ContractViolation("Integrator::last: no step taken yet");
  return *last_;
}

}  // namespace drlm

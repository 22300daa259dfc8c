#pragma once

/// \file
/// Pressure-correction time steppers with a dynamically regularized Lagrange
/// multiplier Q on the convection term.
///
/// Each DRLM step splits the unknowns as
///     u_hat = u_hat1 + Q u_hat2,   u = u1 + Q u2,   p = p1 + Q p2,
/// solves two Helmholtz problems and two Neumann projections that do not
/// depend on Q, and then fixes Q from a scalar quadratic A Q^2 + B Q + C = 0
/// that enforces the discrete energy balance
///     K(u^{n+1}, p^{n+1}) + theta (Q^{n+1})^2 = K(u^n, p^n) + theta (Q^n)^2
///                                             - nu tau ||grad u_hat^{n+1}||^2
/// with K(u, p) = (||u||^2 + tau^2 ||grad p||^2) / 2.

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drlm/grid.hpp"
#include "drlm/solvers.hpp"

namespace drlm {

enum class SchemeKind { pdrlm1, pdrlm2, baseline_pc };

std::string_view to_string(SchemeKind kind);
/// Accepts "pdrlm1", "pdrlm2", "baseline_pc" (also "baseline").
SchemeKind parse_scheme_kind(std::string_view name);

struct SchemeConfig {
  double tau = 0.0;
  double theta = 1.0;
  double nu = 0.0;
  SchemeKind kind = SchemeKind::pdrlm1;
  /// Turns the explicit (u . grad) u term off; used to isolate the linear
  /// energy law of the baseline scheme.
  bool convection = true;
  bool assert_invariants = false;
  double invariant_rel_tol = 1e-8;
  SolverConfig solver{};

  void validate() const;
};

struct State {
  double t = 0.0;
  VelocityField u;
  ScalarField p;
  double Q = 1.0;

  const Grid& grid() const { return u.grid(); }
  /// u = 0, p = 0, Q = 1 at time t.
  static State zero(const Grid& grid, double t = 0.0);
};

/// Time-dependent Dirichlet data and body force. Empty callables mean
/// homogeneous no-slip walls and f = 0.
struct FlowInputs {
  std::function<BoundaryTrace(double t)> boundary;
  std::function<VelocityField(double t)> forcing;

  BoundaryTrace trace(const Grid& grid, double t) const;
  bool unforced() const { return !forcing; }
};

/// Intermediate fields of the last step. Passing the same workspace to
/// consecutive steps warm-starts the iterative solves from the previous
/// step's fields; it never changes what is being solved.
struct StepWorkspace {
  explicit StepWorkspace(const Grid& grid);

  VelocityField u_hat1, u_hat2;
  VelocityField u1, u2;
  ScalarField p1, p2;
  VelocityField u_hat;
  ScalarField phi1, phi2;  ///< projection potentials of the two branches
  bool has_history = false;
};

struct QuadraticCoefficients {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  /// -||u_hat1 - u^n||^2 - 2 theta (Q^n)^2; equals C when f = 0 and the walls
  /// are homogeneous. NaN for schemes that have no such identity.
  double C_crosscheck = 0.0;
  double discriminant = 0.0;
};

struct StepDiagnostics {
  long step = 0;
  double t = 0.0;
  double Q = 1.0;
  double K = 0.0;
  double E_mod = 0.0;  ///< K + theta (Q^2 - 1)
  /// Quantity the scheme's stability result says is non-increasing:
  /// E_mod for the first-order schemes, (3K^{n+1} - K^n)/2 +
  /// theta (3/2 Q_{n+1}^2 - 1/2 Q_n^2 - 1) for P-DRLM2.
  double stability_energy = 0.0;
  double norm_u = 0.0;
  double dissipation = 0.0;  ///< nu tau ||grad u_hat^{n+1}||^2
  QuadraticCoefficients quad{};
  double div_inf = 0.0;
  double u_inf = 0.0;       ///< max |u| over all faces of u^{n+1}
  double proj1_scale = 0.0; ///< max of the two sides of the "proj1" identity
  /// True when f = 0 and the Dirichlet data are homogeneous at both ends of
  /// the step, i.e. the regime in which the energy identities are exact.
  bool energy_premises = false;
  /// "proj1": | ||u1 - u_hat1||^2 - s^2 ||grad phi1||^2 | with phi1 the first
  ///          branch's projection potential and s its step (tau, or 2 tau / 3 for BDF2)
  /// "energy": residual of the discrete energy balance the scheme enforces
  /// "crosscheck": |C - C_crosscheck| (P-DRLM1 only)
  std::map<std::string, double> identity_residuals;
  std::vector<SolveReport> solver_reports;  ///< residual histories stripped

  int cg_iters_total() const;
  double residual(const std::string& name) const;
};

struct StepResult {
  State state;
  StepDiagnostics diagnostics;
};

/// Any failure inside a step. Carries whatever diagnostics were assembled
/// before the failure so the caller can log the failing step.
class StepFailure : public std::runtime_error {
public:
  StepFailure(const std::string& what, StepDiagnostics diag)
      : std::runtime_error(what), diag_(std::move(diag)) {}
  const StepDiagnostics& diagnostics() const { return diag_; }

private:
  StepDiagnostics diag_;
};

/// The quadratic has no admissible real root.
class MultiplierError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Root of A Q^2 + B Q + C = 0 (A > 0). For C < 0 this is the unique positive
/// root, computed without cancellation. For C >= 0 the real root closest to
/// q_prev is returned; a negative discriminant throws MultiplierError.
double solve_multiplier_quadratic(double A, double B, double C, double q_prev);

double energy_K(const VelocityField& u, const ScalarField& p, double tau);
double energy_modified(double K, double Q, double theta);

StepResult step_pdrlm1(const State& state, const SchemeConfig& cfg, const FlowInputs& inputs,
                       StepWorkspace* workspace = nullptr);

/// BDF2 step; `state_nm1` is the state one step before `state_n`.
StepResult step_pdrlm2(const State& state_n, const State& state_nm1, const SchemeConfig& cfg,
                       const FlowInputs& inputs, StepWorkspace* workspace = nullptr);

/// Incremental pressure correction with explicit convection and Q = 1.
StepResult step_baseline_pc(const State& state, const SchemeConfig& cfg, const FlowInputs& inputs,
                            StepWorkspace* workspace = nullptr);

/// Drives one of the schemes step by step. For P-DRLM2 the first step is a
/// P-DRLM1 step followed by resetting Q to 1.
class Integrator {
public:
  Integrator(SchemeConfig cfg, FlowInputs inputs, State initial);

  const StepResult& advance();

  const State& state() const { return current_; }
  const SchemeConfig& config() const { return cfg_; }
  const FlowInputs& inputs() const { return inputs_; }
  long steps_taken() const { return steps_; }
  const StepResult& last() const;

private:
  StepResult step_once();

  SchemeConfig cfg_;
  FlowInputs inputs_;
  State current_;
  double t0_;
  std::optional<State> previous_;
  StepWorkspace workspace_;
  std::optional<StepResult> last_;
  long steps_ = 0;
};

}  // namespace drlm

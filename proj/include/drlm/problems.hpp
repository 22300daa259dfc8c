#pragma once

/// \file
/// Test problems and metrology: the decaying lattice vortex with its exact
/// solution, the lid-driven cavity, error norms, convergence-rate tables and
/// centerline extraction.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drlm/grid.hpp"
#include "drlm/scheme.hpp"

namespace drlm {

using PointFunction = std::function<double(double x, double y)>;
using SpaceTimeFunction = std::function<double(double x, double y, double t)>;

/// Closed-form solution of the incompressible NS equations with f = 0.
struct ExactSolution {
  double nu = 0.0;
  SpaceTimeFunction u, v, p;

  /// u, v sampled at their faces (boundary faces included).
  VelocityField sample_velocity(const Grid& grid, double t) const;
  /// p sampled at cell centers, mean removed.
  ScalarField sample_pressure(const Grid& grid, double t) const;
  BoundaryTrace trace(const Grid& grid, double t) const;
  /// Dirichlet data taken from the exact velocity, f = 0.
  FlowInputs inputs(const Grid& grid) const;
};

/// u = sin(2 pi x) sin(2 pi y) e^{-8 nu pi^2 t}
/// v = cos(2 pi x) cos(2 pi y) e^{-8 nu pi^2 t}
/// p = (1 - sin^2(2 pi x) - cos^2(2 pi y)) / 2 e^{-16 nu pi^2 t}
ExactSolution lattice_vortex(double nu);

VelocityField sample_velocity(const Grid& grid, const PointFunction& u, const PointFunction& v);

/// Discrete curl of a stream function sampled at the grid nodes:
/// u = d(psi)/dy, v = -d(psi)/dx. The result is divergence-free to rounding.
VelocityField velocity_from_streamfunction(const Grid& grid, const PointFunction& psi);

/// psi = amplitude * sin^2(pi x) sin^2(pi y) on the unit square: a single
/// vortex compatible with no-slip walls.
VelocityField box_vortex_velocity(const Grid& grid, double amplitude = 1.0);

/// w - grad(phi) with -Lap(phi) = -div(w); boundary faces are unchanged.
VelocityField project_divergence_free(const VelocityField& w, const SolverConfig& cfg = {});

struct ErrorReport {
  double e_u = 0.0;
  double e_p = 0.0;
  double e_Q = 0.0;
  double t = 0.0;
};

/// L2 errors against the exact solution at state.t. Pressures are compared
/// after removing each field's mean.
ErrorReport compute_errors(const State& state, const ExactSolution& exact);

/// Standard initial state for the vortex: projected velocity samples, exact
/// pressure samples, Q = 1.
State vortex_initial_state(const Grid& grid, const ExactSolution& exact, const SolverConfig& cfg = {});

struct RateRow {
  double tau = 0.0;
  long steps = 0;
  ErrorReport errors{};
  std::optional<double> rate_u, rate_Q, rate_p;
  bool failed = false;
  std::string failure;
};

struct RateTable {
  std::vector<RateRow> rows;
};

/// log2(coarse / fine), or nothing when either value is not positive.
std::optional<double> observed_rate(double coarse, double fine);

/// Fills the rate columns from consecutive rows (tau halving).
void assign_rates(RateTable& table);

struct ConvergenceStudyConfig {
  double nu = 0.1;
  double theta = 1.0;
  int nx = 128;
  std::vector<double> taus;
  double T = 1.0;
  SchemeKind scheme = SchemeKind::pdrlm1;
  SolverConfig solver{};
  bool assert_invariants = false;
  /// Rows are independent; run them on separate threads.
  bool parallel = true;
  /// Called after every step of every row (row index, diagnostics). Must be
  /// thread-safe when `parallel` is set.
  std::function<void(std::size_t, const StepDiagnostics&)> on_step;
};

RateTable run_convergence_study(const ConvergenceStudyConfig& cfg);

/// Number of steps of size tau that reach T exactly; throws if T is not an
/// integer multiple of tau (relative slack 1e-9).
long steps_to_reach(double T, double tau);

// ---------------------------------------------------------------------------
// Lid-driven cavity

/// No-slip walls, tangential velocity `lid` on y = y1.
BoundaryTrace cavity_trace(const Grid& grid, double lid = 1.0);

struct CenterlineProfile {
  /// "u" (u along x = 0.5 against y) or "v" (v along y = 0.5 against x).
  std::string component;
  std::vector<double> coord;
  std::vector<double> value;
  std::vector<double> reference;  ///< empty unless compared
  std::string source;

  double max_abs_deviation() const;
};

/// Bilinear interpolation of the u (resp. v) component, with the wall values
/// taken from `trace`.
double interpolate_u(const VelocityField& vel, const BoundaryTrace& trace, double x, double y);
double interpolate_v(const VelocityField& vel, const BoundaryTrace& trace, double x, double y);

/// u(x_line, y) at the given y stations and v(x, y_line) at the given x stations.
CenterlineProfile centerline_u(const VelocityField& vel, const BoundaryTrace& trace, std::span<const double> ys,
                               double x_line = 0.5);
CenterlineProfile centerline_v(const VelocityField& vel, const BoundaryTrace& trace, std::span<const double> xs,
                               double y_line = 0.5);

/// Station lists at the native resolution: walls plus every cell-center row/column.
std::vector<double> native_stations_y(const Grid& grid);
std::vector<double> native_stations_x(const Grid& grid);

/// Fires when ||u||^2 changed by at most `tol` relative per unit time over
/// the trailing `window`.
class PlateauDetector {
public:
  PlateauDetector(double tau, double window = 1.0, double tol = 1e-4);
  /// Feeds ||u^n||^2 at time t; returns true once the plateau criterion holds.
  bool observe(double t, double energy);
  std::optional<double> fired_at() const { return fired_at_; }
  double last_rate() const { return last_rate_; }

private:
  double window_;
  double tol_;
  std::size_t lag_;
  std::vector<double> history_;
  std::optional<double> fired_at_;
  double last_rate_ = 0.0;
};

struct CavityConfig {
  double Re = 1000.0;
  double theta = 100.0;
  int nx = 128;
  double tau = 0.002;
  double T = 30.0;
  SchemeKind scheme = SchemeKind::pdrlm1;
  SolverConfig solver{};
  bool assert_invariants = false;
  double lid_velocity = 1.0;
  double plateau_window = 1.0;
  double plateau_tol = 1e-4;
  std::vector<double> snapshot_times;
  std::function<void(const StepDiagnostics&)> on_step;
  std::function<void(const State&)> on_snapshot;
};

struct CavityResult {
  State final_state;
  CenterlineProfile u_centerline;  ///< native resolution
  CenterlineProfile v_centerline;
  std::optional<double> plateau_time;
  double final_energy_rate = 0.0;  ///< last relative ||u||^2 change per unit time
  long steps = 0;
};

CavityResult run_cavity(const CavityConfig& cfg);

}  // namespace drlm

#include "drlm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>

#include "drlm/operators.hpp"
#include "drlm/solvers.hpp"

namespace drlm {

namespace {

constexpr double pi = std::numbers::pi;

SolverConfig tight(SolverConfig cfg) {
  cfg.rel_tol = std::min(cfg.rel_tol, 1e-12);
  return cfg;
}

// Index of the interval [xs[k], xs[k+1]] that contains x, clamped.
std::size_t bracket(const std::vector<double>& xs, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t k = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  return std::min(k, xs.size() - 2);
}

double bilinear(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::function<double(std::size_t, std::size_t)>& value, double x, double y) {
  const std::size_t i = bracket(xs, x), j = bracket(ys, y);
  const double sx = std::clamp((x - xs[i]) / (xs[i + 1] - xs[i]), 0.0, 1.0);
  const double sy = std::clamp((y - ys[j]) / (ys[j + 1] - ys[j]), 0.0, 1.0);
  return (1 - sx) * (1 - sy) * value(i, j) + sx * (1 - sy) * value(i + 1, j) + (1 - sx) * sy * value(i, j + 1) +
         sx * sy * value(i + 1, j + 1);
}

std::vector<double> nodes(int n, double a, double h) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) out[k] = a + k * h;
  return out;
}

std::vector<double> walls_and_centers(int n, double a, double b, double h) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 2);
  out.push_back(a);
  for (int k = 0; k < n; ++k) out.push_back(a + (k + 0.5) * h);
  out.push_back(b);
  return out;
}

}  // namespace

VelocityField ExactSolution::sample_velocity(const Grid& grid, double t) const {
  return drlm::sample_velocity(
      grid, [&](double x, double y) { return u(x, y, t); }, [&](double x, double y) { return v(x, y, t); });
}

ScalarField ExactSolution::sample_pressure(const Grid& grid, double t) const {
  ScalarField out(grid);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) out(i, j) = p(grid.center_x(i), grid.center_y(j), t);
  out.remove_mean();
  return out;
}

BoundaryTrace ExactSolution::trace(const Grid& grid, double t) const {
  return BoundaryTrace::sample(
      grid, [&](double x, double y) { return u(x, y, t); }, [&](double x, double y) { return v(x, y, t); });
}

FlowInputs ExactSolution::inputs(const Grid& grid) const {
  FlowInputs in;
  in.boundary = [exact = *this, grid](double t) { return exact.trace(grid, t); };
  return in;
}

ExactSolution lattice_vortex(double nu) {
  if (!(nu > 0.0)) throw ContractViolation("lattice_vortex: nu must be positive");
  ExactSolution s;
  s.nu = nu;
  s.u = [nu](double x, double y, double t) {
    return std::sin(2 * pi * x) * std::sin(2 * pi * y) * std::exp(-8 * nu * pi * pi * t);
  };
  s.v = [nu](double x, double y, double t) {
    return std::cos(2 * pi * x) * std::cos(2 * pi * y) * std::exp(-8 * nu * pi * pi * t);
  };
  s.p = [nu](double x, double y, double t) {
    const double sx = std::sin(2 * pi * x), cy = std::cos(2 * pi * y);
    return 0.5 * (1.0 - sx * sx - cy * cy) * std::exp(-16 * nu * pi * pi * t);
  };
  return s;
}

VelocityField sample_velocity(const Grid& grid, const PointFunction& u, const PointFunction& v) {
  VelocityField out(grid);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i <= grid.nx(); ++i) out.u(i, j) = u(grid.node_x(i), grid.center_y(j));
  for (int j = 0; j <= grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) out.v(i, j) = v(grid.center_x(i), grid.node_y(j));
  return out;
}

VelocityField velocity_from_streamfunction(const Grid& grid, const PointFunction& psi) {
  const int nx = grid.nx(), ny = grid.ny();
  std::vector<double> node_psi(static_cast<std::size_t>(nx + 1) * (ny + 1));
  auto at = [&](int i, int j) -> double& { return node_psi[static_cast<std::size_t>(j) * (nx + 1) + i]; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) at(i, j) = psi(grid.node_x(i), grid.node_y(j));

  VelocityField out(grid);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) out.u(i, j) = (at(i, j + 1) - at(i, j)) / grid.hy();
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) out.v(i, j) = -(at(i + 1, j) - at(i, j)) / grid.hx();
  return out;
}

VelocityField box_vortex_velocity(const Grid& grid, double amplitude) {
  return velocity_from_streamfunction(grid, [&](double x, double y) {
    const double sx = std::sin(pi * (x - grid.x0()) / (grid.x1() - grid.x0()));
    const double sy = std::sin(pi * (y - grid.y0()) / (grid.y1() - grid.y0()));
    return amplitude * sx * sx * sy * sy;
  });
}

VelocityField project_divergence_free(const VelocityField& w, const SolverConfig& cfg) {
  ScalarField rhs = divergence(w);
  rhs *= -1.0;
  auto phi = poisson_neumann_solve(rhs, tight(cfg));
  VelocityField out = w;
  out.axpy(-1.0, gradient(phi.x));
  return out;
}

ErrorReport compute_errors(const State& state, const ExactSolution& exact) {
  const Grid& g = state.grid();
  ErrorReport r;
  r.t = state.t;
  VelocityField du = state.u - exact.sample_velocity(g, state.t);
  r.e_u = norm_vel(du);
  ScalarField p = state.p;
  p.remove_mean();
  ScalarField dp = p - exact.sample_pressure(g, state.t);
  r.e_p = norm_cell(dp);
  r.e_Q = std::abs(1.0 - state.Q);
  return r;
}

State vortex_initial_state(const Grid& grid, const ExactSolution& exact, const SolverConfig& cfg) {
  State s{0.0, project_divergence_free(exact.sample_velocity(grid, 0.0), cfg), exact.sample_pressure(grid, 0.0),
          1.0};
  return s;
}

std::optional<double> observed_rate(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0) || !std::isfinite(coarse) || !std::isfinite(fine)) return std::nullopt;
  return std::log2(coarse / fine);
}

void assign_rates(RateTable& table) {
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    RateRow& row = table.rows[k];
    row.rate_u = row.rate_Q = row.rate_p = std::nullopt;
    if (k == 0) continue;
    const RateRow& prev = table.rows[k - 1];
    if (row.failed || prev.failed) continue;
    row.rate_u = observed_rate(prev.errors.e_u, row.errors.e_u);
    row.rate_Q = observed_rate(prev.errors.e_Q, row.errors.e_Q);
    row.rate_p = observed_rate(prev.errors.e_p, row.errors.e_p);
  }
}

long steps_to_reach(double T, double tau) {
  if (!(T > 0.0) || !(tau > 0.0)) throw ContractViolation("steps_to_reach: T and tau must be positive");
  const double n = T / tau;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n))
    throw ContractViolation("steps_to_reach: T is not an integer multiple of tau");
  return static_cast<long>(r);
}

RateTable run_convergence_study(const ConvergenceStudyConfig& cfg) {
  if (cfg.taus.empty()) throw ContractViolation("run_convergence_study: no time steps given");
  for (std::size_t k = 1; k < cfg.taus.size(); ++k) {
    if (std::abs(cfg.taus[k - 1] - 2.0 * cfg.taus[k]) > 1e-12 * cfg.taus[k - 1])
      throw ContractViolation("run_convergence_study: taus must halve strictly");
  }
  std::vector<long> steps;
  for (double tau : cfg.taus) steps.push_back(steps_to_reach(cfg.T, tau));

  const Grid grid = Grid::unit_square(cfg.nx);
  const ExactSolution exact = lattice_vortex(cfg.nu);
  const State initial = vortex_initial_state(grid, exact, cfg.solver);

  auto run_row = [&](std::size_t k) {
    RateRow row;
    row.tau = cfg.taus[k];
    row.steps = steps[k];
    SchemeConfig sc;
    sc.tau = cfg.taus[k];
    sc.theta = cfg.theta;
    sc.nu = cfg.nu;
    sc.kind = cfg.scheme;
    sc.assert_invariants = cfg.assert_invariants;
    sc.solver = cfg.solver;
    try {
      Integrator integ(sc, exact.inputs(grid), initial);
      for (long n = 0; n < row.steps; ++n) {
        const StepResult& res = integ.advance();
        if (cfg.on_step) cfg.on_step(k, res.diagnostics);
      }
      State final_state = integ.state();
      final_state.t = cfg.T;
      row.errors = compute_errors(final_state, exact);
    } catch (const std::exception& e) {
      row.failed = true;
      row.failure = e.what();
    }
    return row;
  };

  RateTable table;
  if (cfg.parallel && cfg.taus.size() > 1) {
    std::vector<std::future<RateRow>> futures;
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) futures.push_back(std::async(std::launch::async, run_row, k));
    for (auto& f : futures) table.rows.push_back(f.get());
  } else {
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) table.rows.push_back(run_row(k));
  }
  assign_rates(table);
  return table;
}

// ---------------------------------------------------------------------------

BoundaryTrace cavity_trace(const Grid& grid, double lid) {
  BoundaryTrace t = BoundaryTrace::zero(grid);
  std::fill(t.u_top.begin(), t.u_top.end(), lid);
  return t;
}

double CenterlineProfile::max_abs_deviation() const {
  if (reference.size() != value.size()) throw ContractViolation("CenterlineProfile: reference not aligned");
  double m = 0.0;
  for (std::size_t k = 0; k < value.size(); ++k) m = std::max(m, std::abs(value[k] - reference[k]));
  return m;
}

double interpolate_u(const VelocityField& vel, const BoundaryTrace& trace, double x, double y) {
  const Grid& g = vel.grid();
  const auto xs = nodes(g.nx(), g.x0(), g.hx());
  const auto ys = walls_and_centers(g.ny(), g.y0(), g.y1(), g.hy());
  const int ny = g.ny();
  return bilinear(
      xs, ys,
      [&](std::size_t i, std::size_t j) {
        if (j == 0) return trace.u_bottom[i];
        if (j == static_cast<std::size_t>(ny) + 1) return trace.u_top[i];
        return vel.u(static_cast<int>(i), static_cast<int>(j) - 1);
      },
      x, y);
}

double interpolate_v(const VelocityField& vel, const BoundaryTrace& trace, double x, double y) {
  const Grid& g = vel.grid();
  const auto xs = walls_and_centers(g.nx(), g.x0(), g.x1(), g.hx());
  const auto ys = nodes(g.ny(), g.y0(), g.hy());
  const int nx = g.nx();
  return bilinear(
      xs, ys,
      [&](std::size_t i, std::size_t j) {
        if (i == 0) return trace.v_left[j];
        if (i == static_cast<std::size_t>(nx) + 1) return trace.v_right[j];
        return vel.v(static_cast<int>(i) - 1, static_cast<int>(j));
      },
      x, y);
}

CenterlineProfile centerline_u(const VelocityField& vel, const BoundaryTrace& trace, std::span<const double> ys,
                               double x_line) {
  CenterlineProfile prof;
  prof.component = "u";
  for (double y : ys) {
    prof.coord.push_back(y);
    prof.value.push_back(interpolate_u(vel, trace, x_line, y));
  }
  return prof;
}

CenterlineProfile centerline_v(const VelocityField& vel, const BoundaryTrace& trace, std::span<const double> xs,
                               double y_line) {
  CenterlineProfile prof;
  prof.component = "v";
  for (double x : xs) {
    prof.coord.push_back(x);
    prof.value.push_back(interpolate_v(vel, trace, x, y_line));
  }
  return prof;
}

std::vector<double> native_stations_y(const Grid& grid) {
  return walls_and_centers(grid.ny(), grid.y0(), grid.y1(), grid.hy());
}

std::vector<double> native_stations_x(const Grid& grid) {
  return walls_and_centers(grid.nx(), grid.x0(), grid.x1(), grid.hx());
}

PlateauDetector::PlateauDetector(double tau, double window, double tol) : window_(window), tol_(tol) {
  if (!(tau > 0.0) || !(window >= tau) || !(tol > 0.0)) throw ContractViolation("PlateauDetector: bad parameters");
  lag_ = static_cast<std::size_t>(std::llround(window / tau));
}

bool PlateauDetector::observe(double t, double energy) {
  history_.push_back(energy);
  if (history_.size() <= lag_) return fired_at_.has_value();
  const double then = history_[history_.size() - 1 - lag_];
  const double scale = std::max(std::abs(energy), 1e-300);
  last_rate_ = std::abs(energy - then) / (scale * window_);
  if (!fired_at_ && last_rate_ <= tol_) fired_at_ = t;
  return fired_at_.has_value();
}

CavityResult run_cavity(const CavityConfig& cfg) {
  if (!(cfg.Re > 0.0)) throw ContractViolation("run_cavity: Re must be positive");
  const Grid grid = Grid::unit_square(cfg.nx);
  const long steps = steps_to_reach(cfg.T, cfg.tau);

  SchemeConfig sc;
  sc.tau = cfg.tau;
  sc.theta = cfg.theta;
  sc.nu = 1.0 / cfg.Re;
  sc.kind = cfg.scheme;
  sc.assert_invariants = cfg.assert_invariants;
  sc.solver = cfg.solver;

  const BoundaryTrace lid = cavity_trace(grid, cfg.lid_velocity);
  FlowInputs inputs;
  inputs.boundary = [lid](double) { return lid; };

  State initial = State::zero(grid, 0.0);
  initial.u.impose_normal(lid);
  Integrator integ(sc, inputs, initial);
  PlateauDetector plateau(cfg.tau, cfg.plateau_window, cfg.plateau_tol);

  std::vector<double> pending = cfg.snapshot_times;
  std::sort(pending.begin(), pending.end());
  std::size_t next_snapshot = 0;
  while (next_snapshot < pending.size() && pending[next_snapshot] <= 0.5 * cfg.tau) {
    if (cfg.on_snapshot) cfg.on_snapshot(integ.state());
    ++next_snapshot;
  }

  for (long n = 0; n < steps; ++n) {
    const StepResult& res = integ.advance();
    if (cfg.on_step) cfg.on_step(res.diagnostics);
    const double nu2 = res.diagnostics.norm_u * res.diagnostics.norm_u;
    plateau.observe(res.state.t, nu2);
    while (next_snapshot < pending.size() && pending[next_snapshot] <= res.state.t + 0.5 * cfg.tau) {
      if (cfg.on_snapshot) cfg.on_snapshot(res.state);
      ++next_snapshot;
    }
  }

  CavityResult out{integ.state(), {}, {}, plateau.fired_at(), plateau.last_rate(), steps};
  const auto ys = native_stations_y(grid);
  const auto xs = native_stations_x(grid);
  out.u_centerline = centerline_u(out.final_state.u, lid, ys);
  out.v_centerline = centerline_v(out.final_state.u, lid, xs);
  return out;
}

}  // namespace drlm

#include "drlm/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "drlm/operators.hpp"

namespace drlm {

void SolverConfig::validate() const {
  if (!(rel_tol > 0.0)) throw ContractViolation("SolverConfig: rel_tol must be positive");
  if (!(abs_tol >= 0.0)) throw ContractViolation("SolverConfig: abs_tol must be non-negative");
  if (max_iter < 0) throw ContractViolation("SolverConfig: max_iter must be >= 1 (or 0 for default)");
}

std::string_view to_string(PressurePreconditioner p) { return p == PressurePreconditioner::mic0 ? "mic0" : "jacobi"; }

PressurePreconditioner parse_pressure_preconditioner(std::string_view name) {
  if (name == "jacobi") return PressurePreconditioner::jacobi;
  if (name == "mic0") return PressurePreconditioner::mic0;
  throw std::invalid_argument("unknown preconditioner '" + std::string(name) + "' (expected jacobi or mic0)");
}

namespace {

using Flat = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

Flat flatten(const VelocityField& f) {
  Flat out(f.u_values().begin(), f.u_values().end());
  out.insert(out.end(), f.v_values().begin(), f.v_values().end());
  return out;
}

void unflatten(const Flat& x, VelocityField& f) {
  const auto nu = f.u_values().size();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nu), f.u_values().begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(nu), x.end(), f.v_values().begin());
}

// y = alpha*x - nu*Lap(x) with homogeneous Dirichlet data on the flat
// [u; v] layout; x vanishes on boundary faces and y is zeroed there.
// Returns (x, y).
double helmholtz_homogeneous(const Grid& g, double alpha, double nu, const double* x, double* y) {
  const int nx = g.nx(), ny = g.ny();
  const double cx = nu / (g.hx() * g.hx()), cy = nu / (g.hy() * g.hy());
  const double diag = alpha + 2.0 * cx + 2.0 * cy;
  double xy = 0.0;

  const int su = nx + 1;
  const double* U = x;
  double* YU = y;
  for (int j = 0; j < ny; ++j) {
    const double* row = U + static_cast<std::ptrdiff_t>(j) * su;
    const double* down = j > 0 ? row - su : nullptr;
    const double* up = j < ny - 1 ? row + su : nullptr;
    double* out = YU + static_cast<std::ptrdiff_t>(j) * su;
    out[0] = 0.0;
    out[nx] = 0.0;
    for (int i = 1; i < nx; ++i) {
      const double c = row[i];
      const double d = down ? down[i] : -c;
      const double u = up ? up[i] : -c;
      const double val = diag * c - cx * (row[i + 1] + row[i - 1]) - cy * (u + d);
      out[i] = val;
      xy += c * val;
    }
  }

  const double* V = x + static_cast<std::ptrdiff_t>(su) * ny;
  double* YV = y + static_cast<std::ptrdiff_t>(su) * ny;
  for (int i = 0; i < nx; ++i) {
    YV[i] = 0.0;
    YV[static_cast<std::ptrdiff_t>(ny) * nx + i] = 0.0;
  }
  for (int j = 1; j < ny; ++j) {
    const double* row = V + static_cast<std::ptrdiff_t>(j) * nx;
    const double* down = row - nx;
    const double* up = row + nx;
    double* out = YV + static_cast<std::ptrdiff_t>(j) * nx;
    {
      const double c = row[0];
      const double right = nx > 1 ? row[1] : -c;
      const double val = diag * c - cx * (right - c) - cy * (up[0] + down[0]);
      out[0] = val;
      xy += c * val;
    }
    for (int i = 1; i < nx - 1; ++i) {
      const double c = row[i];
      const double val = diag * c - cx * (row[i + 1] + row[i - 1]) - cy * (up[i] + down[i]);
      out[i] = val;
      xy += c * val;
    }
    if (nx > 1) {
      const int i = nx - 1;
      const double c = row[i];
      const double val = diag * c - cx * (row[i - 1] - c) - cy * (up[i] + down[i]);
      out[i] = val;
      xy += c * val;
    }
  }
  return xy;
}

Flat helmholtz_inverse_diagonal(double alpha, double nu, const Grid& g) {
  const int nx = g.nx(), ny = g.ny();
  const double cx = nu / (g.hx() * g.hx()), cy = nu / (g.hy() * g.hy());
  VelocityField d(g);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double ghosts = (j == 0 ? 1.0 : 0.0) + (j == ny - 1 ? 1.0 : 0.0);
      d.u(i, j) = 1.0 / (alpha + 2.0 * cx + (2.0 + ghosts) * cy);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double ghosts = (i == 0 ? 1.0 : 0.0) + (i == nx - 1 ? 1.0 : 0.0);
      d.v(i, j) = 1.0 / (alpha + (2.0 + ghosts) * cx + 2.0 * cy);
    }
  return flatten(d);
}

// y = -Lap(x) with homogeneous Neumann conditions; returns (x, y).
double neumann_laplacian(const Grid& g, const double* x, double* y) {
  const int nx = g.nx(), ny = g.ny();
  const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
  double xy = 0.0;
  for (int j = 0; j < ny; ++j) {
    const double* row = x + static_cast<std::ptrdiff_t>(j) * nx;
    double* out = y + static_cast<std::ptrdiff_t>(j) * nx;
    // Missing neighbours across the wall are replaced by the cell itself.
    const double* down = j > 0 ? row - nx : row;
    const double* up = j < ny - 1 ? row + nx : row;
    {
      const double c = row[0];
      const double val = cx * (c - row[1]) + cy * (2.0 * c - down[0] - up[0]);
      out[0] = val;
      xy += c * val;
    }
    for (int i = 1; i < nx - 1; ++i) {
      const double c = row[i];
      const double val = cx * (2.0 * c - row[i - 1] - row[i + 1]) + cy * (2.0 * c - down[i] - up[i]);
      out[i] = val;
      xy += c * val;
    }
    {
      const int i = nx - 1;
      const double c = row[i];
      const double val = cx * (c - row[i - 1]) + cy * (2.0 * c - down[i] - up[i]);
      out[i] = val;
      xy += c * val;
    }
  }
  return xy;
}

Flat neumann_inverse_diagonal(const Grid& g) {
  const int nx = g.nx(), ny = g.ny();
  const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
  Flat d(g.cell_count());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double nbx = (i > 0 ? 1.0 : 0.0) + (i < nx - 1 ? 1.0 : 0.0);
      const double nby = (j > 0 ? 1.0 : 0.0) + (j < ny - 1 ? 1.0 : 0.0);
      d[g.cell_index(i, j)] = 1.0 / (nbx * cx + nby * cy);
    }
  return d;
}

void subtract_mean(Flat& f) {
  double s = 0.0;
  for (double x : f) s += x;
  const double m = s / static_cast<double>(f.size());
  for (double& x : f) x -= m;
}

/// Either a diagonal scaling (`inv_diag`) or a general solve z = M^{-1} r.
struct Preconditioner {
  Flat inv_diag;
  std::function<void(const double*, double*)> solve;
};

/// Modified incomplete Cholesky factor of the Neumann matrix (relaxation
/// 0.97, pivots below a quarter of the diagonal reset to the diagonal).
Preconditioner neumann_mic0(const Grid& g) {
  const int nx = g.nx(), ny = g.ny();
  const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
  constexpr double relax = 0.97, safety = 0.25;
  auto inv_pivot = std::make_shared<Flat>(g.cell_count());
  Flat& ip = *inv_pivot;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double nbx = (i > 0 ? 1.0 : 0.0) + (i < nx - 1 ? 1.0 : 0.0);
      const double nby = (j > 0 ? 1.0 : 0.0) + (j < ny - 1 ? 1.0 : 0.0);
      const double diag = nbx * cx + nby * cy;
      double e = diag;
      if (i > 0) {
        const double pl = ip[g.cell_index(i - 1, j)];
        const double ax_l = cx;                       // coupling to the right of (i-1, j)
        const double ay_l = j < ny - 1 ? cy : 0.0;    // coupling above (i-1, j)
        e -= (ax_l * pl) * (ax_l * pl) + relax * ax_l * ay_l * pl * pl;
      }
      if (j > 0) {
        const double pb = ip[g.cell_index(i, j - 1)];
        const double ay_b = cy;
        const double ax_b = i < nx - 1 ? cx : 0.0;
        e -= (ay_b * pb) * (ay_b * pb) + relax * ay_b * ax_b * pb * pb;
      }
      if (e < safety * diag) e = diag;
      ip[g.cell_index(i, j)] = 1.0 / std::sqrt(e);
    }
  }
  // With w_k = 1/pivot_k^2 the two sweeps become single-FMA recurrences:
  //   forward  q_k = w_k r_k + cy w_k q_{k-nx} + cx w_k q_{k-1}
  //   backward z_k = q_k + cy w_k z_{k+nx} + cx w_k z_{k+1}
  auto w = std::make_shared<Flat>(ip.size());
  for (std::size_t k = 0; k < ip.size(); ++k) (*w)[k] = ip[k] * ip[k];
  Preconditioner m;
  m.solve = [nx, ny, w, cx, cy](const double* r, double* z) {
    const double* wk = w->data();
    for (int j = 0; j < ny; ++j) {
      const std::size_t row = static_cast<std::size_t>(j) * nx;
      if (j == 0)
        for (int i = 0; i < nx; ++i) z[row + i] = wk[row + i] * r[row + i];
      else
        for (int i = 0; i < nx; ++i) z[row + i] = wk[row + i] * (r[row + i] + cy * z[row + i - nx]);
      for (int i = 1; i < nx; ++i) z[row + i] += cx * wk[row + i] * z[row + i - 1];
    }
    for (int j = ny - 1; j >= 0; --j) {
      const std::size_t row = static_cast<std::size_t>(j) * nx;
      if (j < ny - 1)
        for (int i = 0; i < nx; ++i) z[row + i] += cy * wk[row + i] * z[row + i + nx];
      for (int i = nx - 2; i >= 0; --i) z[row + i] += cx * wk[row + i] * z[row + i + 1];
    }
  };
  return m;
}

// Reductions use four interleaved partial sums in a fixed order: fast, and
// bit-reproducible for a given problem size.
constexpr std::size_t lanes = 4;

double sum4(const double (&acc)[lanes]) { return (acc[0] + acc[1]) + (acc[2] + acc[3]); }

double dot4(const Flat& a, const Flat& b) {
  double acc[lanes] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size(), m = n - n % lanes;
  for (std::size_t k = 0; k < m; k += lanes)
    for (std::size_t l = 0; l < lanes; ++l) acc[l] += a[k + l] * b[k + l];
  for (std::size_t k = m; k < n; ++k) acc[0] += a[k] * b[k];
  return sum4(acc);
}

/// Jacobi-preconditioned CG on A x = b given x0 and r0 = b - A x0.
///
/// The CG residual is not monotone in the 2-norm, so the iterates are passed
/// through minimal-residual smoothing: y_k = y_{k-1} + eta (x_k - y_{k-1}) and
/// s_k = s_{k-1} + eta (r_k - s_{k-1}) with eta minimizing ||s_k||. Then s_k is
/// the residual of y_k and ||s_k|| <= min(||s_{k-1}||, ||r_k||). The reported
/// residuals are ||s_k|| and the returned iterate is y_k.
///
/// `apply` writes A p. With `zero_mean` the residual and the preconditioned
/// residual are projected onto zero-mean vectors every iteration.
template <class Apply>
SolveReport pcg(Flat& x, Flat r, const Preconditioner& M, Apply apply, bool zero_mean, double target,
                int max_iter) {
  const std::size_t n = x.size(), m = n - n % lanes;
  const bool diagonal = !M.solve;
  const Flat& inv_diag = M.inv_diag;
  const double inv_n = 1.0 / static_cast<double>(n);
  SolveReport rep;
  if (zero_mean) subtract_mean(r);
  double rnorm = std::sqrt(dot4(r, r));
  rep.residual_history.push_back(rnorm);
  rep.final_residual = rnorm;
  if (rnorm <= target) {
    rep.converged = true;
    return rep;
  }

  Flat z(n), p(n), ap(n);
  if (diagonal)
    for (std::size_t k = 0; k < n; ++k) z[k] = r[k] * inv_diag[k];
  else
    M.solve(r.data(), z.data());
  if (zero_mean) subtract_mean(z);
  p = z;
  double rz = dot4(r, z);
  Flat y = x, s = r;

  for (int it = 1; it <= max_iter; ++it) {
    apply(p.data(), ap.data());
    const double pap = dot4(p, ap);
    if (!(pap > 0.0)) break;  // breakdown: direction in the null space or NaN
    const double step = rz / pap;

    double acc_r[lanes] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < m; k += lanes)
      for (std::size_t l = 0; l < lanes; ++l) {
        x[k + l] += step * p[k + l];
        r[k + l] -= step * ap[k + l];
        acc_r[l] += r[k + l];
      }
    for (std::size_t k = m; k < n; ++k) {
      x[k] += step * p[k];
      r[k] -= step * ap[k];
      acc_r[0] += r[k];
    }
    const double mr = zero_mean ? sum4(acc_r) * inv_n : 0.0;

    // Project r, precondition, and gather the smoothing and CG scalars.
    double a_z[lanes] = {}, a_rz[lanes] = {}, a_r[lanes] = {}, a_sd[lanes] = {}, a_dd[lanes] = {};
    auto gather = [&](std::size_t k, std::size_t l) {
      const double rk = r[k] - mr;
      r[k] = rk;
      if (diagonal) {
        const double zk = rk * inv_diag[k];
        z[k] = zk;
        a_z[l] += zk;
        a_rz[l] += rk * zk;
      }
      const double dk = rk - s[k];
      a_r[l] += rk;
      a_sd[l] += s[k] * dk;
      a_dd[l] += dk * dk;
    };
    for (std::size_t k = 0; k < m; k += lanes)
      for (std::size_t l = 0; l < lanes; ++l) gather(k + l, l);
    for (std::size_t k = m; k < n; ++k) gather(k, 0);
    if (!diagonal) {
      M.solve(r.data(), z.data());
      auto collect = [&](std::size_t k, std::size_t l) {
        a_z[l] += z[k];
        a_rz[l] += r[k] * z[k];
      };
      for (std::size_t k = 0; k < m; k += lanes)
        for (std::size_t l = 0; l < lanes; ++l) collect(k + l, l);
      for (std::size_t k = m; k < n; ++k) collect(k, 0);
    }
    const double mz = zero_mean ? sum4(a_z) * inv_n : 0.0;
    const double rz_next = sum4(a_rz) - mz * sum4(a_r);
    const double beta = rz_next / rz;
    const double dd = sum4(a_dd);
    const double eta = dd > 0.0 ? -sum4(a_sd) / dd : 0.0;

    double a_ss[lanes] = {};
    auto advance = [&](std::size_t k, std::size_t l) {
      const double sk = s[k] + eta * (r[k] - s[k]);
      s[k] = sk;
      y[k] += eta * (x[k] - y[k]);
      p[k] = (z[k] - mz) + beta * p[k];
      a_ss[l] += sk * sk;
    };
    for (std::size_t k = 0; k < m; k += lanes)
      for (std::size_t l = 0; l < lanes; ++l) advance(k + l, l);
    for (std::size_t k = m; k < n; ++k) advance(k, 0);
    rz = rz_next;

    rnorm = std::sqrt(sum4(a_ss));
    rep.iterations = it;
    rep.final_residual = rnorm;
    rep.residual_history.push_back(rnorm);
    if (rnorm <= target) {
      rep.converged = true;
      break;
    }
  }
  x = std::move(y);
  return rep;
}

}  // namespace

VelocityField apply_helmholtz(double alpha, double nu, const VelocityField& x, const BoundaryTrace& bc) {
  VelocityField lap = laplacian_velocity(x, bc);
  VelocityField y(x.grid());
  const Grid& g = x.grid();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) y.u(i, j) = alpha * x.u(i, j) - nu * lap.u(i, j);
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) y.v(i, j) = alpha * x.v(i, j) - nu * lap.v(i, j);
  return y;
}

ScalarField apply_neumann_laplacian(const ScalarField& phi) {
  ScalarField y(phi.grid());
  neumann_laplacian(phi.grid(), phi.values().data(), y.values().data());
  return y;
}

Solution<VelocityField> helmholtz_solve(double alpha, double nu, const VelocityField& rhs,
                                        const BoundaryTrace& bc, const SolverConfig& cfg,
                                        const VelocityField* initial_guess) {
  cfg.validate();
  if (!(alpha > 0.0)) throw ContractViolation("helmholtz_solve: alpha must be positive");
  if (!(nu >= 0.0)) throw ContractViolation("helmholtz_solve: nu must be non-negative");
  const Grid& g = rhs.grid();
  if (!bc.matches(g)) throw ContractViolation("helmholtz_solve: trace does not match grid");
  if (initial_guess) require_same_grid(g, initial_guess->grid(), "helmholtz_solve");

  // Fold the Dirichlet data into the right-hand side: b = rhs - A(0 interior, bc).
  VelocityField lift(g);
  lift.impose_normal(bc);
  VelocityField b = rhs;
  b.clear_boundary();
  b -= apply_helmholtz(alpha, nu, lift, bc);
  const Flat bf = flatten(b);

  Flat x(bf.size(), 0.0);
  Flat r = bf;
  if (initial_guess) {
    VelocityField interior = *initial_guess;
    interior.clear_boundary();
    x = flatten(interior);
    Flat ax(x.size());
    helmholtz_homogeneous(g, alpha, nu, x.data(), ax.data());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= ax[k];
  }

  const double bnorm = std::sqrt(dot(bf, bf));
  const double target = std::max(cfg.rel_tol * bnorm, cfg.abs_tol);
  const Preconditioner M{helmholtz_inverse_diagonal(alpha, nu, g), {}};
  auto apply = [&](const double* p, double* out) { return helmholtz_homogeneous(g, alpha, nu, p, out); };

  SolveReport rep = pcg(x, std::move(r), M, apply, false, target, cfg.iteration_cap(g));
  rep.rhs_norm = bnorm;
  VelocityField sol(g);
  unflatten(x, sol);
  sol.impose_normal(bc);
  if (!rep.converged || !sol.all_finite()) {
    throw SolverError("helmholtz_solve: no convergence after " + std::to_string(rep.iterations) +
                          " iterations (residual " + std::to_string(rep.final_residual) + ")",
                      std::move(rep));
  }
  return {std::move(sol), std::move(rep)};
}

Solution<ScalarField> poisson_neumann_solve(const ScalarField& rhs, const SolverConfig& cfg,
                                            const ScalarField* initial_guess) {
  cfg.validate();
  if (!rhs.all_finite()) throw ContractViolation("poisson_neumann_solve: non-finite right-hand side");
  const Grid& g = rhs.grid();
  if (initial_guess) require_same_grid(g, initial_guess->grid(), "poisson_neumann_solve");

  Flat b(rhs.values().begin(), rhs.values().end());
  const double rms = std::sqrt(dot(b, b) / static_cast<double>(b.size()));
  double sum = 0.0;
  for (double v : b) sum += v;
  const double mean = sum / static_cast<double>(b.size());
  subtract_mean(b);

  Flat x(b.size(), 0.0);
  Flat r = b;
  if (initial_guess) {
    x.assign(initial_guess->values().begin(), initial_guess->values().end());
    subtract_mean(x);
    Flat ax(x.size());
    neumann_laplacian(g, x.data(), ax.data());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= ax[k];
  }

  const double bnorm = std::sqrt(dot(b, b));
  const double target = std::max(cfg.rel_tol * bnorm, cfg.abs_tol);
  const Preconditioner M = cfg.pressure_preconditioner == PressurePreconditioner::mic0
                               ? neumann_mic0(g)
                               : Preconditioner{neumann_inverse_diagonal(g), {}};
  auto apply = [&](const double* p, double* out) { return neumann_laplacian(g, p, out); };

  SolveReport rep = pcg(x, std::move(r), M, apply, true, target, cfg.iteration_cap(g));
  rep.rhs_norm = bnorm;
  rep.compatibility_warning = std::abs(mean) > 1e-6 * rms;
  ScalarField sol(g, std::move(x));
  sol.remove_mean();
  if (!rep.converged || !sol.all_finite()) {
    throw SolverError("poisson_neumann_solve: no convergence after " + std::to_string(rep.iterations) +
                          " iterations (residual " + std::to_string(rep.final_residual) + ")",
                      std::move(rep));
  }
  return {std::move(sol), std::move(rep)};
}

}  // namespace drlm

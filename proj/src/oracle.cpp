#include "drlm/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace drlm {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Interior face numbering: u faces (i = 1..nx-1, j = 0..ny-1) first, then
/// v faces (i = 0..nx-1, j = 1..ny-1).
struct Layout {
  int nx, ny;
  double hx, hy;
  int nu_int() const { return (nx - 1) * ny; }
  int nv_int() const { return nx * (ny - 1); }
  int faces() const { return nu_int() + nv_int(); }
  int cells() const { return nx * ny; }
  int u(int i, int j) const { return j * (nx - 1) + (i - 1); }
  int v(int i, int j) const { return nu_int() + (j - 1) * nx + i; }
  int c(int i, int j) const { return j * nx + i; }
};

MatrixXd assemble_laplacian(const Layout& L) {
  MatrixXd M = MatrixXd::Zero(L.faces(), L.faces());
  const double ax = 1.0 / (L.hx * L.hx), ay = 1.0 / (L.hy * L.hy);
  for (int j = 0; j < L.ny; ++j) {
    for (int i = 1; i < L.nx; ++i) {
      const int r = L.u(i, j);
      M(r, r) -= 2.0 * ax + 2.0 * ay;
      if (i > 1) M(r, L.u(i - 1, j)) += ax;
      if (i < L.nx - 1) M(r, L.u(i + 1, j)) += ax;
      // Wall neighbour in y: ghost = -interior.
      if (j > 0) M(r, L.u(i, j - 1)) += ay; else M(r, r) -= ay;
      if (j < L.ny - 1) M(r, L.u(i, j + 1)) += ay; else M(r, r) -= ay;
    }
  }
  for (int j = 1; j < L.ny; ++j) {
    for (int i = 0; i < L.nx; ++i) {
      const int r = L.v(i, j);
      M(r, r) -= 2.0 * ax + 2.0 * ay;
      if (j > 1) M(r, L.v(i, j - 1)) += ay;
      if (j < L.ny - 1) M(r, L.v(i, j + 1)) += ay;
      if (i > 0) M(r, L.v(i - 1, j)) += ax; else M(r, r) -= ax;
      if (i < L.nx - 1) M(r, L.v(i + 1, j)) += ax; else M(r, r) -= ax;
    }
  }
  return M;
}

MatrixXd assemble_divergence(const Layout& L) {
  MatrixXd D = MatrixXd::Zero(L.cells(), L.faces());
  for (int j = 0; j < L.ny; ++j) {
    for (int i = 0; i < L.nx; ++i) {
      const int r = L.c(i, j);
      if (i + 1 < L.nx) D(r, L.u(i + 1, j)) += 1.0 / L.hx;
      if (i > 0) D(r, L.u(i, j)) -= 1.0 / L.hx;
      if (j + 1 < L.ny) D(r, L.v(i, j + 1)) += 1.0 / L.hy;
      if (j > 0) D(r, L.v(i, j)) -= 1.0 / L.hy;
    }
  }
  return D;
}

MatrixXd assemble_gradient(const Layout& L) {
  MatrixXd G = MatrixXd::Zero(L.faces(), L.cells());
  for (int j = 0; j < L.ny; ++j) {
    for (int i = 1; i < L.nx; ++i) {
      G(L.u(i, j), L.c(i, j)) += 1.0 / L.hx;
      G(L.u(i, j), L.c(i - 1, j)) -= 1.0 / L.hx;
    }
  }
  for (int j = 1; j < L.ny; ++j) {
    for (int i = 0; i < L.nx; ++i) {
      G(L.v(i, j), L.c(i, j)) += 1.0 / L.hy;
      G(L.v(i, j), L.c(i, j - 1)) -= 1.0 / L.hy;
    }
  }
  return G;
}

/// (w . grad) w on interior faces for a field with homogeneous walls, from
/// full arrays that include the (zero) boundary faces.
VectorXd convection(const Layout& L, const VectorXd& w) {
  const int nx = L.nx, ny = L.ny;
  std::vector<double> U(static_cast<std::size_t>((nx + 1) * ny), 0.0), V(static_cast<std::size_t>(nx * (ny + 1)), 0.0);
  auto Uat = [&](int i, int j) -> double& { return U[static_cast<std::size_t>(j * (nx + 1) + i)]; };
  auto Vat = [&](int i, int j) -> double& { return V[static_cast<std::size_t>(j * nx + i)]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) Uat(i, j) = w(L.u(i, j));
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) Vat(i, j) = w(L.v(i, j));

  VectorXd out = VectorXd::Zero(L.faces());
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const double below = j == 0 ? -Uat(i, j) : Uat(i, j - 1);
      const double above = j == ny - 1 ? -Uat(i, j) : Uat(i, j + 1);
      const double vbar = (Vat(i - 1, j) + Vat(i, j) + Vat(i - 1, j + 1) + Vat(i, j + 1)) / 4.0;
      out(L.u(i, j)) = Uat(i, j) * (Uat(i + 1, j) - Uat(i - 1, j)) / (2.0 * L.hx) + vbar * (above - below) / (2.0 * L.hy);
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double left = i == 0 ? -Vat(i, j) : Vat(i - 1, j);
      const double right = i == nx - 1 ? -Vat(i, j) : Vat(i + 1, j);
      const double ubar = (Uat(i, j - 1) + Uat(i + 1, j - 1) + Uat(i, j) + Uat(i + 1, j)) / 4.0;
      out(L.v(i, j)) = ubar * (right - left) / (2.0 * L.hx) + Vat(i, j) * (Vat(i, j + 1) - Vat(i, j - 1)) / (2.0 * L.hy);
    }
  }
  return out;
}

VectorXd to_vector(const Layout& L, const VelocityField& f) {
  VectorXd x(L.faces());
  for (int j = 0; j < L.ny; ++j)
    for (int i = 1; i < L.nx; ++i) x(L.u(i, j)) = f.u(i, j);
  for (int j = 1; j < L.ny; ++j)
    for (int i = 0; i < L.nx; ++i) x(L.v(i, j)) = f.v(i, j);
  return x;
}

VelocityField to_field(const Layout& L, const Grid& g, const VectorXd& x) {
  VelocityField f(g);
  for (int j = 0; j < L.ny; ++j)
    for (int i = 1; i < L.nx; ++i) f.u(i, j) = x(L.u(i, j));
  for (int j = 1; j < L.ny; ++j)
    for (int i = 0; i < L.nx; ++i) f.v(i, j) = x(L.v(i, j));
  return f;
}

VectorXd centered(VectorXd x) {
  x.array() -= x.mean();
  return x;
}

}  // namespace

DenseStep dense_pdrlm1_step(const State& state, double tau, double nu, double theta) {
  const Grid& g = state.grid();
  const Layout L{g.nx(), g.ny(), g.hx(), g.hy()};
  const double w = g.cell_area();

  const MatrixXd Lap = assemble_laplacian(L);
  const MatrixXd D = assemble_divergence(L);
  const MatrixXd G = assemble_gradient(L);
  const MatrixXd P = -D * G;
  const MatrixXd H = MatrixXd::Identity(L.faces(), L.faces()) / tau - nu * Lap;

  // Neumann problem bordered with the zero-mean constraint.
  const int nc = L.cells();
  MatrixXd Pb = MatrixXd::Zero(nc + 1, nc + 1);
  Pb.topLeftCorner(nc, nc) = P;
  Pb.block(0, nc, nc, 1).setOnes();
  Pb.block(nc, 0, 1, nc).setOnes();
  const Eigen::FullPivLU<MatrixXd> poisson(Pb);
  const Eigen::FullPivLU<MatrixXd> helmholtz(H);
  auto solve_poisson = [&](const VectorXd& rhs) {
    VectorXd b = VectorXd::Zero(nc + 1);
    b.head(nc) = rhs;
    return VectorXd(poisson.solve(b).head(nc));
  };

  const VectorXd un = to_vector(L, state.u);
  VectorXd pn(nc);
  for (int k = 0; k < nc; ++k) pn(k) = state.p.values()[static_cast<std::size_t>(k)];

  const VectorXd uh1 = helmholtz.solve(VectorXd(un / tau - G * pn));
  const VectorXd uh2 = helmholtz.solve(VectorXd(-convection(L, un)));
  const VectorXd phi1 = solve_poisson(-D * uh1 / tau);
  const VectorXd phi2 = solve_poisson(-D * uh2 / tau);
  const VectorXd u1 = uh1 - tau * G * phi1;
  const VectorXd u2 = uh2 - tau * G * phi2;
  const VectorXd p1 = centered(pn + phi1);
  const VectorXd p2 = phi2;

  auto ip = [&](const VectorXd& a, const VectorXd& b) { return w * a.dot(b); };
  auto gip = [&](const VectorXd& a, const VectorXd& b) { return -w * a.dot(Lap * b); };
  auto pip = [&](const VectorXd& a, const VectorXd& b) { return w * (G * a).dot(G * b); };
  const double t2 = tau * tau;

  DenseStep out{VelocityField(g), ScalarField(g), 1.0};
  out.A = ip(u2, u2) + 2.0 * theta + t2 * pip(p2, p2) + 2.0 * tau * nu * gip(uh2, uh2);
  out.B = 2.0 * ip(u1, u2) + 2.0 * t2 * pip(p1, p2) + 4.0 * nu * tau * gip(uh1, uh2);
  out.C = ip(u1, u1) - ip(un, un) + t2 * pip(p1, p1) - t2 * pip(pn, pn) - 2.0 * theta * state.Q * state.Q +
          2.0 * tau * nu * gip(uh1, uh1);
  out.Q = (-out.B + std::sqrt(out.B * out.B - 4.0 * out.A * out.C)) / (2.0 * out.A);

  out.u = to_field(L, g, u1 + out.Q * u2);
  const VectorXd p = centered(p1 + out.Q * p2);
  for (int k = 0; k < nc; ++k) out.p.values()[static_cast<std::size_t>(k)] = p(k);
  return out;
}

State random_admissible_state(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int nx = grid.nx(), ny = grid.ny();
  std::vector<double> psi(static_cast<std::size_t>((nx + 1) * (ny + 1)), 0.0);
  auto at = [&](int i, int j) -> double& { return psi[static_cast<std::size_t>(j * (nx + 1) + i)]; };
  for (int j = 1; j < ny; ++j)
    for (int i = 1; i < nx; ++i) at(i, j) = 0.1 * dist(rng);

  State s = State::zero(grid, 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) s.u.u(i, j) = (at(i, j + 1) - at(i, j)) / grid.hy();
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) s.u.v(i, j) = -(at(i + 1, j) - at(i, j)) / grid.hx();
  for (double& x : s.p.values()) x = dist(rng);
  s.p.remove_mean();
  s.Q = 1.0 + 0.5 * dist(rng);
  return s;
}

double OracleComparison::worst() const { return std::max({du, dp, dQ}); }

OracleComparison compare_with_dense_oracle(int n, std::uint64_t seed, double tau, double nu, double theta) {
  const Grid grid = Grid::unit_square(n);
  std::mt19937_64 rng(seed);
  const State s = random_admissible_state(grid, rng);

  SchemeConfig cfg;
  cfg.tau = tau;
  cfg.nu = nu;
  cfg.theta = theta;
  cfg.solver.rel_tol = 1e-15;
  cfg.solver.abs_tol = 1e-15;
  const StepResult modular = step_pdrlm1(s, cfg, FlowInputs{});
  const DenseStep dense = dense_pdrlm1_step(s, tau, nu, theta);

  OracleComparison cmp;
  cmp.du = (modular.state.u - dense.u).max_abs() / std::max(1.0, dense.u.max_abs());
  cmp.dp = (modular.state.p - dense.p).max_abs() / std::max(1.0, dense.p.max_abs());
  cmp.dQ = std::abs(modular.state.Q - dense.Q) / std::max(1.0, std::abs(dense.Q));
  return cmp;
}

}  // namespace drlm

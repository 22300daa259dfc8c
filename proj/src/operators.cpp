#include "drlm/operators.hpp"

#include <algorithm>
#include <cmath>

namespace drlm {

ScalarField divergence(const VelocityField& vel) {
  const Grid& g = vel.grid();
  ScalarField out(g);
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = (vel.u(i + 1, j) - vel.u(i, j)) * ihx + (vel.v(i, j + 1) - vel.v(i, j)) * ihy;
  return out;
}

VelocityField gradient(const ScalarField& s) {
  const Grid& g = s.grid();
  VelocityField out(g);
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) out.u(i, j) = (s(i, j) - s(i - 1, j)) * ihx;
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out.v(i, j) = (s(i, j) - s(i, j - 1)) * ihy;
  return out;
}

VelocityField laplacian_velocity(const VelocityField& vel, const BoundaryTrace& t) {
  const Grid& g = vel.grid();
  if (!t.matches(g)) throw ContractViolation("laplacian_velocity: trace does not match grid");
  const int nx = g.nx(), ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
  VelocityField out(g);

  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const double c = vel.u(i, j);
      const double down = j > 0 ? vel.u(i, j - 1) : 2.0 * t.u_bottom[i] - c;
      const double up = j < ny - 1 ? vel.u(i, j + 1) : 2.0 * t.u_top[i] - c;
      out.u(i, j) = (vel.u(i + 1, j) - 2.0 * c + vel.u(i - 1, j)) * ihx2 + (up - 2.0 * c + down) * ihy2;
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double c = vel.v(i, j);
      const double left = i > 0 ? vel.v(i - 1, j) : 2.0 * t.v_left[j] - c;
      const double right = i < nx - 1 ? vel.v(i + 1, j) : 2.0 * t.v_right[j] - c;
      out.v(i, j) = (right - 2.0 * c + left) * ihx2 + (vel.v(i, j + 1) - 2.0 * c + vel.v(i, j - 1)) * ihy2;
    }
  }
  return out;
}

double inner_vel(const VelocityField& a, const VelocityField& b) {
  require_same_grid(a.grid(), b.grid(), "inner_vel");
  const Grid& g = a.grid();
  const int nx = g.nx(), ny = g.ny();
  double su = 0.0;
  for (int j = 0; j < ny; ++j) {
    su += 0.5 * a.u(0, j) * b.u(0, j);
    for (int i = 1; i < nx; ++i) su += a.u(i, j) * b.u(i, j);
    su += 0.5 * a.u(nx, j) * b.u(nx, j);
  }
  double sv = 0.0;
  for (int i = 0; i < nx; ++i) sv += 0.5 * (a.v(i, 0) * b.v(i, 0) + a.v(i, ny) * b.v(i, ny));
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) sv += a.v(i, j) * b.v(i, j);
  return (su + sv) * g.cell_area();
}

double norm_vel(const VelocityField& a) { return std::sqrt(inner_vel(a, a)); }

double inner_cell(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "inner_cell");
  const auto av = a.values();
  const auto bv = b.values();
  double s = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s * a.grid().cell_area();
}

double norm_cell(const ScalarField& a) { return std::sqrt(inner_cell(a, a)); }

double grad_inner_vel(const VelocityField& a, const BoundaryTrace& ta, const VelocityField& b,
                      const BoundaryTrace& tb) {
  require_same_grid(a.grid(), b.grid(), "grad_inner_vel");
  const Grid& g = a.grid();
  if (!ta.matches(g) || !tb.matches(g)) throw ContractViolation("grad_inner_vel: trace mismatch");
  const int nx = g.nx(), ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());

  double sx = 0.0, sy = 0.0, wall = 0.0;

  // u component: x-links reach the boundary faces, y-links end at ghost cells.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      sx += (a.u(i + 1, j) - a.u(i, j)) * (b.u(i + 1, j) - b.u(i, j));
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 1; i < nx; ++i)
      sy += (a.u(i, j + 1) - a.u(i, j)) * (b.u(i, j + 1) - b.u(i, j));
  for (int i = 1; i < nx; ++i) {
    wall += 2.0 * ihy2 * (a.u(i, 0) - ta.u_bottom[i]) * (b.u(i, 0) - tb.u_bottom[i]);
    wall += 2.0 * ihy2 * (a.u(i, ny - 1) - ta.u_top[i]) * (b.u(i, ny - 1) - tb.u_top[i]);
  }

  // v component, transposed roles.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      sy += (a.v(i, j + 1) - a.v(i, j)) * (b.v(i, j + 1) - b.v(i, j));
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      sx += (a.v(i + 1, j) - a.v(i, j)) * (b.v(i + 1, j) - b.v(i, j));
  for (int j = 1; j < ny; ++j) {
    wall += 2.0 * ihx2 * (a.v(0, j) - ta.v_left[j]) * (b.v(0, j) - tb.v_left[j]);
    wall += 2.0 * ihx2 * (a.v(nx - 1, j) - ta.v_right[j]) * (b.v(nx - 1, j) - tb.v_right[j]);
  }

  return (sx * ihx2 + sy * ihy2 + wall) * g.cell_area();
}

double grad_seminorm_vel(const VelocityField& vel, const BoundaryTrace& trace) {
  return std::sqrt(std::max(0.0, grad_inner_vel(vel, trace, vel, trace)));
}

double grad_inner_pressure(const ScalarField& a, const ScalarField& b) {
  return inner_vel(gradient(a), gradient(b));
}

double grad_norm_pressure(const ScalarField& s) { return norm_vel(gradient(s)); }

double divergence_inf(const VelocityField& vel) { return divergence(vel).max_abs(); }

}  // namespace drlm

#include "drlm/convection.hpp"

#include "drlm/operators.hpp"

namespace drlm {

VelocityField advect(const VelocityField& a, const VelocityField& b, const BoundaryTrace& tb) {
  require_same_grid(a.grid(), b.grid(), "advect");
  const Grid& g = a.grid();
  if (!tb.matches(g)) throw ContractViolation("advect: trace does not match grid");
  const int nx = g.nx(), ny = g.ny();
  const double i2hx = 0.5 / g.hx(), i2hy = 0.5 / g.hy();
  VelocityField out(g);

  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const double c = b.u(i, j);
      const double down = j > 0 ? b.u(i, j - 1) : 2.0 * tb.u_bottom[i] - c;
      const double up = j < ny - 1 ? b.u(i, j + 1) : 2.0 * tb.u_top[i] - c;
      const double dudx = (b.u(i + 1, j) - b.u(i - 1, j)) * i2hx;
      const double dudy = (up - down) * i2hy;
      const double vbar = 0.25 * (a.v(i - 1, j) + a.v(i, j) + a.v(i - 1, j + 1) + a.v(i, j + 1));
      out.u(i, j) = a.u(i, j) * dudx + vbar * dudy;
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double c = b.v(i, j);
      const double left = i > 0 ? b.v(i - 1, j) : 2.0 * tb.v_left[j] - c;
      const double right = i < nx - 1 ? b.v(i + 1, j) : 2.0 * tb.v_right[j] - c;
      const double dvdx = (right - left) * i2hx;
      const double dvdy = (b.v(i, j + 1) - b.v(i, j - 1)) * i2hy;
      const double ubar = 0.25 * (a.u(i, j - 1) + a.u(i + 1, j - 1) + a.u(i, j) + a.u(i + 1, j));
      out.v(i, j) = ubar * dvdx + a.v(i, j) * dvdy;
    }
  }
  return out;
}

VelocityField convect(const VelocityField& u, const BoundaryTrace& trace) { return advect(u, u, trace); }

double trilinear_b(const VelocityField& u, const VelocityField& v, const BoundaryTrace& trace_v,
                   const VelocityField& w) {
  return inner_vel(advect(u, v, trace_v), w);
}

}  // namespace drlm

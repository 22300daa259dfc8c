#pragma once

/// \file
/// Explicit advection term N(a)b = (a . grad) b on the MAC grid.
///
/// Advective form with centered differences. The transverse velocity is the
/// 4-point average onto the face. Next to a wall the missing neighbour is the
/// ghost value 2g - b (first order there).

#include "drlm/grid.hpp"

namespace drlm {

/// (a . grad) b evaluated on interior faces; `trace_b` supplies the wall
/// values of b. Boundary faces of the result are 0.
VelocityField advect(const VelocityField& a, const VelocityField& b, const BoundaryTrace& trace_b);

/// (u . grad) u.
VelocityField convect(const VelocityField& u, const BoundaryTrace& trace);

/// b(u, v, w) = ((u . grad) v, w). Diagnostic only; the steppers never call it.
double trilinear_b(const VelocityField& u, const VelocityField& v, const BoundaryTrace& trace_v,
                   const VelocityField& w);

}  // namespace drlm

#pragma once

/// \file
/// Discrete differential operators and inner products on the MAC grid.
///
/// The pairing of `divergence` and `gradient` is exactly skew-adjoint with
/// respect to `inner_vel` / `inner_cell` on fields with zero normal trace,
/// and `laplacian_velocity` is symmetric with
/// (-laplacian(v), v) = grad_seminorm_vel(v)^2 for homogeneous Dirichlet data.
/// The energy identities of the time steppers rest on these two facts.

#include "drlm/grid.hpp"

namespace drlm {

/// Cell-centered divergence. Boundary faces contribute their stored values,
/// which callers keep equal to the normal Dirichlet data.
ScalarField divergence(const VelocityField& vel);

/// Face-centered gradient of a cell field. Boundary-normal faces carry 0
/// (homogeneous Neumann convention for pressure).
VelocityField gradient(const ScalarField& s);

/// 5-point Laplacian of each component on interior faces. Tangential data
/// enters through ghost reflection (ghost = 2g - interior); normal data is
/// read from the boundary faces. Boundary faces of the result are 0.
VelocityField laplacian_velocity(const VelocityField& vel, const BoundaryTrace& trace);

/// L2 inner product over faces with weight hx*hy, halved on boundary faces
/// (trapezoidal in the normal direction).
double inner_vel(const VelocityField& a, const VelocityField& b);
double norm_vel(const VelocityField& a);

/// L2 inner product over cells with weight hx*hy.
double inner_cell(const ScalarField& a, const ScalarField& b);
double norm_cell(const ScalarField& a);

/// Bilinear form (grad a, grad b) built from nearest-neighbour differences,
/// including wall links to the ghost values defined by each field's trace.
double grad_inner_vel(const VelocityField& a, const BoundaryTrace& ta, const VelocityField& b,
                      const BoundaryTrace& tb);
/// ||grad vel|| consistent with laplacian_velocity.
double grad_seminorm_vel(const VelocityField& vel, const BoundaryTrace& trace);

/// (gradient(a), gradient(b)) and its induced norm.
double grad_inner_pressure(const ScalarField& a, const ScalarField& b);
double grad_norm_pressure(const ScalarField& s);

/// max |divergence(vel)| over cells.
double divergence_inf(const VelocityField& vel);

}  // namespace drlm

#pragma once

/// \file
/// Jacobi-preconditioned conjugate gradients for the two SPD systems a
/// projection step needs: the velocity Helmholtz problem (alpha I - nu Lap)
/// with Dirichlet data, and the cell-centered pure-Neumann pressure Poisson
/// problem restricted to zero-mean fields.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drlm/grid.hpp"

namespace drlm {

/// Preconditioner of the pressure Poisson solve. The Helmholtz solve always
/// uses Jacobi, which is well conditioned there (alpha ~ 1/tau dominates).
enum class PressurePreconditioner {
  jacobi,
  /// Modified incomplete Cholesky, MIC(0). Several times fewer iterations
  /// on fine grids; used by the long cavity runs.
  mic0,
};

std::string_view to_string(PressurePreconditioner p);
PressurePreconditioner parse_pressure_preconditioner(std::string_view name);

struct SolverConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_iter = 0;  ///< 0 selects 10 * (nx + ny)
  PressurePreconditioner pressure_preconditioner = PressurePreconditioner::jacobi;

  int iteration_cap(const Grid& grid) const { return max_iter > 0 ? max_iter : 10 * (grid.nx() + grid.ny()); }
  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;
  double rhs_norm = 0.0;  ///< norm the relative tolerance is measured against
  bool converged = false;
  /// Set by the Neumann solver when the right-hand side had to be projected
  /// by more than 1e-6 of its RMS (a boundary flux imbalance).
  bool compatibility_warning = false;
  /// Residual norms for k = 0..iterations (Euclidean over unknowns). The
  /// iterates are minimal-residual smoothed, so the sequence is non-increasing.
  std::vector<double> residual_history;
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

private:
  SolveReport report_;
};

template <class Field>
struct Solution {
  Field x;
  SolveReport report;
};

/// Solves alpha*x - nu*Lap(x) = rhs on interior faces with the Dirichlet data
/// `bc`; the boundary faces of the result hold the normal data. Values of
/// `rhs` on boundary faces are ignored. `initial_guess` only affects the
/// iteration count.
Solution<VelocityField> helmholtz_solve(double alpha, double nu, const VelocityField& rhs,
                                        const BoundaryTrace& bc, const SolverConfig& cfg,
                                        const VelocityField* initial_guess = nullptr);

/// Solves -Lap(phi) = rhs - mean(rhs) with homogeneous Neumann conditions and
/// returns the zero-mean solution.
Solution<ScalarField> poisson_neumann_solve(const ScalarField& rhs, const SolverConfig& cfg,
                                            const ScalarField* initial_guess = nullptr);

/// alpha*x - nu*Lap(x) on interior faces (boundary faces of the result are 0).
VelocityField apply_helmholtz(double alpha, double nu, const VelocityField& x, const BoundaryTrace& bc);

/// -Lap(phi) with homogeneous Neumann conditions, i.e. -divergence(gradient(phi)).
ScalarField apply_neumann_laplacian(const ScalarField& phi);

}  // namespace drlm

#pragma once

/// \file
/// Operator-identity checks on random fields, shared by the `selftest`
/// subcommand and the test suite.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drlm/grid.hpp"

namespace drlm {

struct IdentityCheck {
  std::string name;
  double residual = 0.0;  ///< relative unless noted in the name
  double tolerance = 0.0;
  bool passed() const { return residual <= tolerance; }
};

struct SelfCheckReport {
  std::vector<IdentityCheck> checks;
  int passed() const;
  int failed() const;
};

/// Uniform(-1, 1) fields. The *_interior variants have zero boundary faces.
VelocityField random_velocity(const Grid& grid, std::mt19937_64& rng, bool zero_boundary = false);
ScalarField random_scalar(const Grid& grid, std::mt19937_64& rng);
BoundaryTrace random_trace(const Grid& grid, std::mt19937_64& rng);

/// Divergence/gradient duality, Laplacian symmetry and its summation-by-parts
/// identity, linearity of every operator, gradient of constants, row sums of
/// the Neumann Laplacian, and the solver residual contracts, on a few grids.
SelfCheckReport run_operator_identities(std::uint64_t seed = 20240501);

}  // namespace drlm

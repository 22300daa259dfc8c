#pragma once

/// \file
/// Reference implementation of one P-DRLM1 step with f = 0 and no-slip walls,
/// built from explicitly assembled dense matrices and direct solves. It shares
/// only the Grid/field containers with the production code path.

#include <cstdint>
#include <random>

#include "drlm/grid.hpp"
#include "drlm/scheme.hpp"

namespace drlm {

struct DenseStep {
  VelocityField u;
  ScalarField p;
  double Q = 1.0;
  double A = 0.0, B = 0.0, C = 0.0;
};

DenseStep dense_pdrlm1_step(const State& state, double tau, double nu, double theta);

/// u from the discrete curl of a random node stream function that vanishes on
/// the boundary (so u is discretely divergence-free with zero normal trace),
/// random zero-mean p, Q in [0.5, 1.5].
State random_admissible_state(const Grid& grid, std::mt19937_64& rng);

struct OracleComparison {
  double du = 0.0;  ///< max |u - u_dense| / max(1, max |u_dense|)
  double dp = 0.0;
  double dQ = 0.0;
  double worst() const;
};

/// Runs step_pdrlm1 with tight solver tolerances and the dense oracle on the
/// same random admissible state.
OracleComparison compare_with_dense_oracle(int n = 4, std::uint64_t seed = 7, double tau = 0.1, double nu = 0.05,
                                           double theta = 1.0);

}  // namespace drlm

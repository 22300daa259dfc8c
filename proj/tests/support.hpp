#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "drlm/grid.hpp"
#include "drlm/operators.hpp"

namespace drlm::test {

inline constexpr double pi = std::numbers::pi;

/// Smallest log2 ratio of consecutive errors (grids or steps halving).
inline double worst_order(const std::vector<double>& errors) {
  double worst = 1e300;
  for (std::size_t k = 1; k < errors.size(); ++k) worst = std::min(worst, std::log2(errors[k - 1] / errors[k]));
  return worst;
}

inline double max_abs_diff(const VelocityField& a, const VelocityField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.u_values().size(); ++k) m = std::max(m, std::abs(a.u_values()[k] - b.u_values()[k]));
  for (std::size_t k = 0; k < a.v_values().size(); ++k) m = std::max(m, std::abs(a.v_values()[k] - b.v_values()[k]));
  return m;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

/// Max over interior faces only.
inline double max_abs_interior(const VelocityField& a) {
  const Grid& g = a.grid();
  double m = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) m = std::max(m, std::abs(a.u(i, j)));
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) m = std::max(m, std::abs(a.v(i, j)));
  return m;
}

/// n-point Gauss-Legendre rule on [0, 1], by Newton iteration on P_n.
struct GaussRule {
  std::vector<double> x, w;
  explicit GaussRule(int n) {
    for (int k = 1; k <= n; ++k) {
      double z = std::cos(pi * (k - 0.25) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int m = 2; m <= n; ++m) {
          const double p2 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p0) / m;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x.push_back(0.5 * (1.0 - z));
      w.push_back(1.0 / ((1.0 - z * z) * dp * dp));
    }
  }
};

/// Tensor Gauss quadrature of f over the unit square, split into panels.
template <class F>
double integrate_unit_square(F&& f, int panels = 8, int order = 12) {
  const GaussRule rule(order);
  const double h = 1.0 / panels;
  double sum = 0.0;
  for (int a = 0; a < panels; ++a)
    for (int b = 0; b < panels; ++b)
      for (std::size_t p = 0; p < rule.x.size(); ++p)
        for (std::size_t q = 0; q < rule.x.size(); ++q)
          sum += rule.w[p] * rule.w[q] * f((a + rule.x[p]) * h, (b + rule.x[q]) * h);
  return sum * h * h;
}

}  // namespace drlm::test

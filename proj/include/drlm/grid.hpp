#pragma once

/// \file
/// MAC staggered grid on a rectangle and the field types that live on it.
///
/// Layout (nx x ny cells):
///  - u is stored on vertical faces x_i = x0 + i*hx, i = 0..nx, at y-centers (j+1/2)*hy, j = 0..ny-1
///  - v is stored on horizontal faces y_j = y0 + j*hy, j = 0..ny, at x-centers, i = 0..nx-1
///  - scalars are stored at cell centers
/// Faces with i = 0, nx (u) or j = 0, ny (v) lie on the boundary and carry the
/// normal Dirichlet value; they are never unknowns of a solve.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drlm {

/// Raised when a caller violates an operator's preconditions (mismatched
/// grids, wrong array sizes, non-finite input where finite is required).
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class Grid {
public:
  Grid(int nx, int ny, double x0 = 0.0, double x1 = 1.0, double y0 = 0.0, double y1 = 1.0);

  /// Unit square with nx x ny cells.
  static Grid unit_square(int nx, int ny) { return Grid(nx, ny); }
  static Grid unit_square(int n) { return Grid(n, n); }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double y0() const { return y0_; }
  double y1() const { return y1_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double cell_area() const { return hx_ * hy_; }

  std::size_t u_size() const { return static_cast<std::size_t>(nx_ + 1) * ny_; }
  std::size_t v_size() const { return static_cast<std::size_t>(nx_) * (ny_ + 1); }
  std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * ny_; }

  std::size_t u_index(int i, int j) const { return static_cast<std::size_t>(j) * (nx_ + 1) + i; }
  std::size_t v_index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  std::size_t cell_index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

  // Physical coordinates of the storage locations.
  double node_x(int i) const { return x0_ + i * hx_; }
  double node_y(int j) const { return y0_ + j * hy_; }
  double center_x(int i) const { return x0_ + (i + 0.5) * hx_; }
  double center_y(int j) const { return y0_ + (j + 0.5) * hy_; }

  bool operator==(const Grid& other) const = default;

private:
  int nx_;
  int ny_;
  double x0_, x1_, y0_, y1_;
  double hx_, hy_;
};

/// Dirichlet data on the four edges of the rectangle.
///
/// Normal components sit on the boundary faces themselves; tangential
/// components are given at the edge nodes and enter through ghost reflection.
struct BoundaryTrace {
  std::vector<double> u_left, u_right;  ///< normal u at x0/x1, size ny (face y-centers)
  std::vector<double> v_bottom, v_top;  ///< normal v at y0/y1, size nx (face x-centers)
  std::vector<double> u_bottom, u_top;  ///< tangential u at y0/y1, size nx+1 (x nodes)
  std::vector<double> v_left, v_right;  ///< tangential v at x0/x1, size ny+1 (y nodes)

  static BoundaryTrace zero(const Grid& grid);

  /// Samples a continuous velocity field (u(x,y), v(x,y)) along the edges.
  static BoundaryTrace sample(const Grid& grid, const std::function<double(double, double)>& u,
                              const std::function<double(double, double)>& v);

  bool is_homogeneous() const;
  bool matches(const Grid& grid) const;

  /// a*this + b*other, edge by edge.
  BoundaryTrace combined(double a, const BoundaryTrace& other, double b) const;
};

class ScalarField {
public:
  explicit ScalarField(const Grid& grid);
  ScalarField(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }

  double& operator()(int i, int j) { return values_[grid_.cell_index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.cell_index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double mean() const;
  double max_abs() const;
  bool all_finite() const;
  /// Subtracts the cell average so the field represents a pressure modulo constants.
  void remove_mean();

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);
  /// this += s * other
  void axpy(double s, const ScalarField& other);

private:
  Grid grid_;
  std::vector<double> values_;
};

class VelocityField {
public:
  explicit VelocityField(const Grid& grid);
  VelocityField(const Grid& grid, std::vector<double> u, std::vector<double> v);

  const Grid& grid() const { return grid_; }

  double& u(int i, int j) { return u_[grid_.u_index(i, j)]; }
  double u(int i, int j) const { return u_[grid_.u_index(i, j)]; }
  double& v(int i, int j) { return v_[grid_.v_index(i, j)]; }
  double v(int i, int j) const { return v_[grid_.v_index(i, j)]; }

  std::span<double> u_values() { return u_; }
  std::span<const double> u_values() const { return u_; }
  std::span<double> v_values() { return v_; }
  std::span<const double> v_values() const { return v_; }

  /// Writes the normal components of `trace` into the boundary faces.
  void impose_normal(const BoundaryTrace& trace);
  /// Zeroes the boundary faces.
  void clear_boundary();

  double max_abs() const;
  bool all_finite() const;

  VelocityField& operator+=(const VelocityField& other);
  VelocityField& operator-=(const VelocityField& other);
  VelocityField& operator*=(double s);
  void axpy(double s, const VelocityField& other);

private:
  Grid grid_;
  std::vector<double> u_;
  std::vector<double> v_;
};

VelocityField operator+(VelocityField a, const VelocityField& b);
VelocityField operator-(VelocityField a, const VelocityField& b);
VelocityField operator*(double s, VelocityField a);
ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

void require_same_grid(const Grid& a, const Grid& b, const char* where);

}  // namespace drlm

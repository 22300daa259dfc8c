#include "drlm/grid.hpp"

#include <algorithm>
#include <cmath>

namespace drlm {

namespace {

bool finite_all(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

double max_abs_of(std::span<const double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> lincomb(double a, const std::vector<double>& x, double b,
                            const std::vector<double>& y) {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = a * x[k] + b * y[k];
  return out;
}

}  // namespace

Grid::Grid(int nx, int ny, double x0, double x1, double y0, double y1)
    : nx_(nx), ny_(ny), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
  if (nx < 2 || ny < 2) throw ContractViolation("Grid: nx and ny must be at least 2");
  if (!(x1 > x0) || !(y1 > y0)) throw ContractViolation("Grid: empty domain");
  hx_ = (x1 - x0) / nx;
  hy_ = (y1 - y0) / ny;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) throw ContractViolation(std::string(where) + ": grid mismatch");
}

// ---------------------------------------------------------------------------
// BoundaryTrace

BoundaryTrace BoundaryTrace::zero(const Grid& g) {
  BoundaryTrace t;
  t.u_left.assign(g.ny(), 0.0);
  t.u_right.assign(g.ny(), 0.0);
  t.v_bottom.assign(g.nx(), 0.0);
  t.v_top.assign(g.nx(), 0.0);
  t.u_bottom.assign(g.nx() + 1, 0.0);
  t.u_top.assign(g.nx() + 1, 0.0);
  t.v_left.assign(g.ny() + 1, 0.0);
  t.v_right.assign(g.ny() + 1, 0.0);
  return t;
}

BoundaryTrace BoundaryTrace::sample(const Grid& g, const std::function<double(double, double)>& u,
                                    const std::function<double(double, double)>& v) {
  BoundaryTrace t = zero(g);
  for (int j = 0; j < g.ny(); ++j) {
    t.u_left[j] = u(g.x0(), g.center_y(j));
    t.u_right[j] = u(g.x1(), g.center_y(j));
  }
  for (int i = 0; i < g.nx(); ++i) {
    t.v_bottom[i] = v(g.center_x(i), g.y0());
    t.v_top[i] = v(g.center_x(i), g.y1());
  }
  for (int i = 0; i <= g.nx(); ++i) {
    t.u_bottom[i] = u(g.node_x(i), g.y0());
    t.u_top[i] = u(g.node_x(i), g.y1());
  }
  for (int j = 0; j <= g.ny(); ++j) {
    t.v_left[j] = v(g.x0(), g.node_y(j));
    t.v_right[j] = v(g.x1(), g.node_y(j));
  }
  return t;
}

bool BoundaryTrace::is_homogeneous() const {
  auto zero_all = [](const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return x == 0.0; });
  };
  return zero_all(u_left) && zero_all(u_right) && zero_all(v_bottom) && zero_all(v_top) &&
         zero_all(u_bottom) && zero_all(u_top) && zero_all(v_left) && zero_all(v_right);
}

bool BoundaryTrace::matches(const Grid& g) const {
  const auto nx = static_cast<std::size_t>(g.nx());
  const auto ny = static_cast<std::size_t>(g.ny());
  return u_left.size() == ny && u_right.size() == ny && v_bottom.size() == nx &&
         v_top.size() == nx && u_bottom.size() == nx + 1 && u_top.size() == nx + 1 &&
         v_left.size() == ny + 1 && v_right.size() == ny + 1;
}

BoundaryTrace BoundaryTrace::combined(double a, const BoundaryTrace& o, double b) const {
  BoundaryTrace t;
  t.u_left = lincomb(a, u_left, b, o.u_left);
  t.u_right = lincomb(a, u_right, b, o.u_right);
  t.v_bottom = lincomb(a, v_bottom, b, o.v_bottom);
  t.v_top = lincomb(a, v_top, b, o.v_top);
  t.u_bottom = lincomb(a, u_bottom, b, o.u_bottom);
  t.u_top = lincomb(a, u_top, b, o.u_top);
  t.v_left = lincomb(a, v_left, b, o.v_left);
  t.v_right = lincomb(a, v_right, b, o.v_right);
  return t;
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(const Grid& grid) : grid_(grid), values_(grid.cell_count(), 0.0) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count())
    throw ContractViolation("ScalarField: value count does not match grid");
}

double ScalarField::mean() const {
  double s = 0.0;
  for (double x : values_) s += x;
  return s / static_cast<double>(values_.size());
}

double ScalarField::max_abs() const { return max_abs_of(values_); }
bool ScalarField::all_finite() const { return finite_all(values_); }

void ScalarField::remove_mean() {
  const double m = mean();
  for (double& x : values_) x -= m;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  axpy(1.0, o);
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  axpy(-1.0, o);
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

void ScalarField::axpy(double s, const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField::axpy");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * o.values_[k];
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

// ---------------------------------------------------------------------------
// VelocityField

VelocityField::VelocityField(const Grid& grid)
    : grid_(grid), u_(grid.u_size(), 0.0), v_(grid.v_size(), 0.0) {}

VelocityField::VelocityField(const Grid& grid, std::vector<double> u, std::vector<double> v)
    : grid_(grid), u_(std::move(u)), v_(std::move(v)) {
  if (u_.size() != grid_.u_size() || v_.size() != grid_.v_size())
    throw ContractViolation("VelocityField: component sizes do not match grid");
}

void VelocityField::impose_normal(const BoundaryTrace& t) {
  if (!t.matches(grid_)) throw ContractViolation("impose_normal: trace does not match grid");
  const int nx = grid_.nx(), ny = grid_.ny();
  for (int j = 0; j < ny; ++j) {
    u(0, j) = t.u_left[j];
    u(nx, j) = t.u_right[j];
  }
  for (int i = 0; i < nx; ++i) {
    v(i, 0) = t.v_bottom[i];
    v(i, ny) = t.v_top[i];
  }
}

void VelocityField::clear_boundary() { impose_normal(BoundaryTrace::zero(grid_)); }

double VelocityField::max_abs() const { return std::max(max_abs_of(u_), max_abs_of(v_)); }
bool VelocityField::all_finite() const { return finite_all(u_) && finite_all(v_); }

VelocityField& VelocityField::operator+=(const VelocityField& o) {
  axpy(1.0, o);
  return *this;
}

VelocityField& VelocityField::operator-=(const VelocityField& o) {
  axpy(-1.0, o);
  return *this;
}

VelocityField& VelocityField::operator*=(double s) {
  for (double& x : u_) x *= s;
  for (double& x : v_) x *= s;
  return *this;
}

void VelocityField::axpy(double s, const VelocityField& o) {
  require_same_grid(grid_, o.grid_, "VelocityField::axpy");
  for (std::size_t k = 0; k < u_.size(); ++k) u_[k] += s * o.u_[k];
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += s * o.v_[k];
}

VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
VelocityField operator*(double s, VelocityField a) { return a *= s; }

}  // namespace drlm

#pragma once

// Staggered 2D Yee grid for the H_z-only (TE) polarization.
//
// Layout (unit grid spacing):
//   H_z   at cell centres (i + 1/2, j + 1/2), index cell(i, j) = i * ny + j
//   E_x   at (i + 1/2, j + 1), between cell(i, j) and cell(i, j + 1)
//   E_y   at (i + 1, j + 1/2), between cell(i, j) and cell(i + 1, j)
// Edge vectors have length 2 * nx * ny: all E_x first, then all E_y.
// On a non-periodic axis the field beyond the last cell is zero (a hard wall
// buried behind the PML).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wavefirst/error.hpp"
#include "wavefirst/types.hpp"

namespace wavefirst {

struct PmlParams {
  int thickness = 10;
  // Conductivity scale of the polynomial profile. Zero selects
  // default_max_sigma(thickness, polynomial_order).
  double max_sigma = 0.0;
  int polynomial_order = 3;
};

/// Normal-incidence reflection target used to pick sigma_max when none is given.
constexpr double kPmlTargetReflection = 1e-6;

/// sigma_max giving a theoretical normal-incidence reflection of
/// kPmlTargetReflection for a vacuum wave: R = exp(-2 sigma_max d / (m + 1)).
inline double default_max_sigma(int thickness, int order) {
  return -(order + 1) * std::log(kPmlTargetReflection) / (2.0 * thickness);
}

enum class BoundaryKind { Absorbing, Periodic };

struct Boundary {
  BoundaryKind kind = BoundaryKind::Absorbing;
  PmlParams pml{};

  static Boundary absorbing(PmlParams pml = {}) { return {BoundaryKind::Absorbing, pml}; }
  static Boundary periodic() { return {BoundaryKind::Periodic, {}}; }

  bool is_periodic() const { return kind == BoundaryKind::Periodic; }
  int pml_cells() const { return is_periodic() ? 0 : pml.thickness; }
};

enum class Axis { X, Y };

/// Rectangle of cells [x0, x0 + width) x [y0, y0 + height).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  int x1() const { return x0 + width; }
  int y1() const { return y0 + height; }
  bool contains(int i, int j) const { return i >= x0 && i < x1() && j >= y0 && j < y1(); }
  bool empty() const { return width <= 0 || height <= 0; }
  bool operator==(const Rect&) const = default;
};

class GridSpec {
 public:
  GridSpec(int nx, int ny, double wavelength, Boundary boundary_x, Boundary boundary_y)
      : nx_(nx), ny_(ny), wavelength_(wavelength), bx_(boundary_x), by_(boundary_y) {
    if (nx < 4 || ny < 4) {
      throw Error(ErrorCode::InvalidGrid, "grid must be at least 4x4 cells, got " +
                                              std::to_string(nx) + "x" + std::to_string(ny));
    }
    if (!(wavelength > 2.0) || !std::isfinite(wavelength)) {
      throw Error(ErrorCode::InvalidGrid,
                  "wavelength must exceed 2 grid cells (Nyquist), got " + std::to_string(wavelength));
    }
    validate_boundary(bx_, nx_, "x");
    validate_boundary(by_, ny_, "y");
    omega_ = 2.0 * kPi / wavelength_;
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int cells() const { return nx_ * ny_; }
  int edges() const { return 2 * nx_ * ny_; }
  double wavelength() const { return wavelength_; }
  double omega() const { return omega_; }
  const Boundary& boundary_x() const { return bx_; }
  const Boundary& boundary_y() const { return by_; }
  const Boundary& boundary(Axis axis) const { return axis == Axis::X ? bx_ : by_; }
  int extent(Axis axis) const { return axis == Axis::X ? nx_ : ny_; }

  int cell(int i, int j) const { return i * ny_ + j; }
  int ex_edge(int i, int j) const { return cell(i, j); }
  int ey_edge(int i, int j) const { return nx_ * ny_ + cell(i, j); }
  int cell_x(int index) const { return index / ny_; }
  int cell_y(int index) const { return index % ny_; }

  /// Same grid at a different wavelength (multi-frequency objectives).
  GridSpec with_wavelength(double wavelength) const { return {nx_, ny_, wavelength, bx_, by_}; }

  /// Cells whose centre lies inside an absorbing layer.
  bool in_pml(int i, int j) const {
    const int px = bx_.pml_cells();
    const int py = by_.pml_cells();
    return i < px || i >= nx_ - px || j < py || j >= ny_ - py;
  }

  /// The rectangle of cells outside every absorbing layer.
  Rect interior() const {
    const int px = bx_.pml_cells();
    const int py = by_.pml_cells();
    return {px, py, nx_ - 2 * px, ny_ - 2 * py};
  }

  /// Neighbouring cell index along an axis (step = +1 or -1), honouring
  /// periodic wrap; -1 when the neighbour lies beyond a hard wall.
  int neighbour(int i, int j, Axis axis, int step) const {
    if (axis == Axis::X) {
      int k = i + step;
      if (k < 0 || k >= nx_) {
        if (!bx_.is_periodic()) return -1;
        k = (k + nx_) % nx_;
      }
      return cell(k, j);
    }
    int k = j + step;
    if (k < 0 || k >= ny_) {
      if (!by_.is_periodic()) return -1;
      k = (k + ny_) % ny_;
    }
    return cell(i, k);
  }

  /// Conductivity at coordinate u (grid units, 0 at the low wall) along an axis.
  double sigma(Axis axis, double u) const {
    const Boundary& b = boundary(axis);
    if (b.is_periodic()) return 0.0;
    const double d = b.pml.thickness;
    const double n = extent(axis);
    double depth = 0.0;
    if (u < d) {
      depth = (d - u) / d;
    } else if (u > n - d) {
      depth = (u - (n - d)) / d;
    } else {
      return 0.0;
    }
    return b.pml.max_sigma * std::pow(depth, b.pml.polynomial_order);
  }

  /// Stretch factor s = 1 + i sigma / omega at cell centre k (coordinate k + 1/2).
  cplx stretch_center(Axis axis, int k) const { return {1.0, sigma(axis, k + 0.5) / omega_}; }
  /// Stretch factor at the edge between cells k and k + 1 (coordinate k + 1).
  cplx stretch_edge(Axis axis, int k) const { return {1.0, sigma(axis, k + 1.0) / omega_}; }

 private:
  static void validate_boundary(Boundary& b, int n, const char* name) {
    if (b.is_periodic()) return;
    if (b.pml.thickness < 4) {
      throw Error(ErrorCode::InvalidGrid,
                  std::string("PML thickness along ") + name + " must be >= 4 cells");
    }
    if (2 * b.pml.thickness >= n) {
      throw Error(ErrorCode::InvalidGrid,
                  std::string("PML thickness along ") + name + " must be < half the grid extent");
    }
    if (b.pml.polynomial_order < 0) {
      throw Error(ErrorCode::InvalidGrid, "PML polynomial order must be >= 0");
    }
    if (b.pml.max_sigma == 0.0) {
      b.pml.max_sigma = default_max_sigma(b.pml.thickness, b.pml.polynomial_order);
    }
    if (!(b.pml.max_sigma > 0.0)) {
      throw Error(ErrorCode::InvalidGrid, "PML max_sigma must be positive");
    }
  }

  int nx_;
  int ny_;
  double wavelength_;
  double omega_;
  Boundary bx_;
  Boundary by_;
};

struct Curls {
  SparseOperator ch;  // H_z (cells) -> (E_x, E_y) edges, 2N x N
  SparseOperator ce;  // edges -> H_z cells, N x 2N
};

/// Discrete curls. With `stretched` false the PML stretching is omitted, which
/// is how the interior-invariance property is checked.
inline Curls build_curls(const GridSpec& grid, bool stretched = true) {
  const int n = grid.cells();
  std::vector<Triplet> ch;
  std::vector<Triplet> ce;
  ch.reserve(4 * n);
  ce.reserve(4 * n);

  auto edge_s = [&](Axis a, int k) { return stretched ? grid.stretch_edge(a, k) : cplx{1.0}; };
  auto center_s = [&](Axis a, int k) { return stretched ? grid.stretch_center(a, k) : cplx{1.0}; };

  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.ny(); ++j) {
      const int c = grid.cell(i, j);
      // E_x = dH/dy on the edge above the cell.
      {
        const cplx inv = 1.0 / edge_s(Axis::Y, j);
        const int e = grid.ex_edge(i, j);
        ch.emplace_back(e, c, -inv);
        if (int up = grid.neighbour(i, j, Axis::Y, +1); up >= 0) ch.emplace_back(e, up, inv);
      }
      // E_y = -dH/dx on the edge to the right of the cell.
      {
        const cplx inv = 1.0 / edge_s(Axis::X, i);
        const int e = grid.ey_edge(i, j);
        ch.emplace_back(e, c, inv);
        if (int right = grid.neighbour(i, j, Axis::X, +1); right >= 0) ch.emplace_back(e, right, -inv);
      }
      // (curl E)_z = dE_y/dx - dE_x/dy at the cell centre.
      {
        const cplx inv_x = 1.0 / center_s(Axis::X, i);
        ce.emplace_back(c, grid.ey_edge(i, j), inv_x);
        if (int left = grid.neighbour(i, j, Axis::X, -1); left >= 0) {
          ce.emplace_back(c, grid.ey_edge(grid.cell_x(left), j), -inv_x);
        }
        const cplx inv_y = 1.0 / center_s(Axis::Y, j);
        ce.emplace_back(c, grid.ex_edge(i, j), -inv_y);
        if (int down = grid.neighbour(i, j, Axis::Y, -1); down >= 0) {
          ce.emplace_back(c, grid.ex_edge(i, grid.cell_y(down)), inv_y);
        }
      }
    }
  }
  return {make_operator(2 * n, n, ch), make_operator(n, 2 * n, ce)};
}

/// Averaging map from cell-centred design values to E edges. Interior edges
/// weigh their two cells by 1/2; an edge against a hard wall copies its one cell.
inline SparseOperator build_edge_map(const GridSpec& grid) {
  const int n = grid.cells();
  std::vector<Triplet> m;
  m.reserve(4 * n);
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.ny(); ++j) {
      const int c = grid.cell(i, j);
      auto add = [&](int edge, int other) {
        if (other >= 0) {
          m.emplace_back(edge, c, 0.5);
          m.emplace_back(edge, other, 0.5);
        } else {
          m.emplace_back(edge, c, 1.0);
        }
      };
      add(grid.ex_edge(i, j), grid.neighbour(i, j, Axis::Y, +1));
      add(grid.ey_edge(i, j), grid.neighbour(i, j, Axis::X, +1));
    }
  }
  return make_operator(2 * n, n, m);
}

/// Grid plus its immutable operators; shared read-only between solves.
struct YeeOperators {
  GridSpec grid;
  SparseOperator ch;
  SparseOperator ce;
  SparseOperator edge_map;

  static YeeOperators build(const GridSpec& grid) {
    Curls curls = build_curls(grid);
    return {grid, std::move(curls.ch), std::move(curls.ce), build_edge_map(grid)};
  }
};

}  // namespace wavefirst

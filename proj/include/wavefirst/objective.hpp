#pragma once

// Boundary-value design objectives: the field is pinned to that of a perfect
// device on the two outermost layers of the design box, and the physics
// residual is measured on every row whose stencil stays inside the box.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "wavefirst/error.hpp"
#include "wavefirst/modes.hpp"
#include "wavefirst/physics.hpp"

namespace wavefirst {

enum class Side { Left, Right, Bottom, Top };

struct DesignObjective {
  // Field unknowns live on these cells; an empty window means the whole grid.
  Rect window;
  std::vector<int> pinned_indices;
  CVec pinned_values;
  std::vector<Side> pinned_sides;  // box sides whose two outer layers are pinned
};

inline Rect effective_window(const GridSpec& grid, const Rect& window) {
  return window.empty() ? Rect{0, 0, grid.nx(), grid.ny()} : window;
}

inline std::vector<int> window_cells(const GridSpec& grid, const Rect& window) {
  const Rect w = effective_window(grid, window);
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(w.width) * w.height);
  for (int i = w.x0; i < w.x1(); ++i) {
    for (int j = w.y0; j < w.y1(); ++j) cells.push_back(grid.cell(i, j));
  }
  return cells;
}

/// Window cells whose whole five-point stencil (including periodic wrap) lies
/// inside the window. These rows make up the windowed physics residual.
inline std::vector<int> residual_rows(const GridSpec& grid, const Rect& window) {
  const Rect w = effective_window(grid, window);
  auto inside = [&](int idx) { return idx < 0 || w.contains(grid.cell_x(idx), grid.cell_y(idx)); };
  std::vector<int> rows;
  for (int i = w.x0; i < w.x1(); ++i) {
    for (int j = w.y0; j < w.y1(); ++j) {
      if (inside(grid.neighbour(i, j, Axis::X, -1)) && inside(grid.neighbour(i, j, Axis::X, +1)) &&
          inside(grid.neighbour(i, j, Axis::Y, -1)) && inside(grid.neighbour(i, j, Axis::Y, +1))) {
        rows.push_back(grid.cell(i, j));
      }
    }
  }
  return rows;
}

/// Windowed residual ||(A(p) x - b(p))|_rows||.
inline double windowed_residual(const Structure& s, const FieldState& x, const SourceSpec& src,
                                const YeeOperators& ops, const Rect& window) {
  const CVec r = residual_vector(s, x, src, ops);
  double sq = 0.0;
  for (int row : residual_rows(ops.grid, window)) sq += std::norm(r[row]);
  return std::sqrt(sq);
}

/// Cells of one side of the box at the given depth (0 = outermost), ordered by
/// increasing transverse coordinate.
inline std::vector<int> side_layer(const GridSpec& grid, const Rect& box, Side side, int depth) {
  std::vector<int> cells;
  switch (side) {
    case Side::Left:
      for (int j = box.y0; j < box.y1(); ++j) cells.push_back(grid.cell(box.x0 + depth, j));
      break;
    case Side::Right:
      for (int j = box.y0; j < box.y1(); ++j) cells.push_back(grid.cell(box.x1() - 1 - depth, j));
      break;
    case Side::Bottom:
      for (int i = box.x0; i < box.x1(); ++i) cells.push_back(grid.cell(i, box.y0 + depth));
      break;
    case Side::Top:
      for (int i = box.x0; i < box.x1(); ++i) cells.push_back(grid.cell(i, box.y1() - 1 - depth));
      break;
  }
  return cells;
}

inline int side_length(const Rect& box, Side side) {
  return side == Side::Left || side == Side::Right ? box.height : box.width;
}

/// Plane just outside a box side, at `gap` cells from the box, whose forward
/// direction points away from the box when `outward` is set and into it otherwise.
inline PortPlane side_plane(const Rect& box, Side side, int gap, bool outward) {
  PortPlane plane;
  switch (side) {
    case Side::Left:
      plane = {Axis::X, box.x0 - 1 - gap, box.y0, box.y1(), outward ? -1 : +1};
      break;
    case Side::Right:
      plane = {Axis::X, box.x1() + gap, box.y0, box.y1(), outward ? +1 : -1};
      break;
    case Side::Bottom:
      plane = {Axis::Y, box.y0 - 1 - gap, box.x0, box.x1(), outward ? -1 : +1};
      break;
    case Side::Top:
      plane = {Axis::Y, box.y1() + gap, box.x0, box.x1(), outward ? +1 : -1};
      break;
  }
  return plane;
}

namespace detail {

inline void check_box(const GridSpec& grid, const Rect& box) {
  if (box.width < 5 || box.height < 5 || box.x0 < 0 || box.y0 < 0 || box.x1() > grid.nx() ||
      box.y1() > grid.ny()) {
    throw Error(ErrorCode::DimensionMismatch, "design box must be at least 5x5 and inside the grid");
  }
}

/// Pinned map over the two-layer ring of a box, all zero.
struct RingPins {
  std::vector<int> order;
  std::vector<cplx> value;
  std::vector<int> slot;  // cell -> position in order, or -1

  std::vector<Side> sides;

  RingPins(const GridSpec& grid, const Rect& box, const std::vector<Side>& sides_)
      : slot(grid.cells(), -1), sides(sides_) {
    for (Side side : sides) {
      for (int depth = 0; depth < 2; ++depth) {
        for (int c : side_layer(grid, box, side, depth)) {
          if (slot[c] < 0) {
            slot[c] = static_cast<int>(order.size());
            order.push_back(c);
            value.emplace_back(0.0);
          }
        }
      }
    }
  }

  void set_layer(const std::vector<int>& cells, const CVec& v) {
    for (std::size_t k = 0; k < cells.size(); ++k) value[slot[cells[k]]] = v[static_cast<Eigen::Index>(k)];
  }

  DesignObjective finish(const Rect& box) const {
    DesignObjective obj;
    obj.window = box;
    obj.pinned_indices = order;
    obj.pinned_values = Eigen::Map<const CVec>(value.data(), static_cast<Eigen::Index>(value.size()));
    obj.pinned_sides = sides;
    return obj;
  }
};

}  // namespace detail

/// Freezes the pinned layers of the box to the medium just outside them: each
/// layer cell copies the exterior cell beyond its nearest pinned side. The
/// rows next to the box edge couple to p on these cells, so leaving them free
/// lets a zero windowed residual coexist with a wrong exterior field.
inline void freeze_pinned_layers(Structure& s, const GridSpec& grid, const DesignObjective& obj) {
  detail::check_structure(s, grid);
  const Rect& box = obj.window;
  for (int c : obj.pinned_indices) {
    const int i = grid.cell_x(c);
    const int j = grid.cell_y(c);
    int best = std::numeric_limits<int>::max();
    int from = -1;
    for (Side side : obj.pinned_sides) {
      int depth = 0;
      int outside = -1;
      switch (side) {
        case Side::Left:
          depth = i - box.x0;
          outside = grid.neighbour(box.x0, j, Axis::X, -1);
          break;
        case Side::Right:
          depth = box.x1() - 1 - i;
          outside = grid.neighbour(box.x1() - 1, j, Axis::X, +1);
          break;
        case Side::Bottom:
          depth = j - box.y0;
          outside = grid.neighbour(i, box.y0, Axis::Y, -1);
          break;
        case Side::Top:
          depth = box.y1() - 1 - j;
          outside = grid.neighbour(i, box.y1() - 1, Axis::Y, +1);
          break;
      }
      if (depth < best) {
        best = depth;
        from = outside;
      }
    }
    if (from >= 0 && !box.contains(grid.cell_x(from), grid.cell_y(from))) s.p[c] = s.p[from];
    s.vary[static_cast<std::size_t>(c)] = false;
  }
}

/// A port on one side of the design box with the mode it carries; the profile
/// spans the whole side.
struct PortMode {
  Side side = Side::Left;
  ModeProfile mode;
};

/// Amplitude that gives `to` the same forward power as a unit wave in `from`.
inline double power_matched_amplitude(const ModeProfile& from, const ModeProfile& to) {
  return std::sqrt(std::abs(from.unit_power() / to.unit_power()));
}

/// Perfect-coupler boundary values: the input mode entering through its side,
/// the power-matched output mode leaving through its side, zero elsewhere.
inline DesignObjective build_coupler_objective(const GridSpec& grid, const Rect& box, const PortMode& in,
                                               const PortMode& out, double output_phase = 0.0) {
  detail::check_box(grid, box);
  if (in.side == out.side) throw Error(ErrorCode::DimensionMismatch, "input and output ports share a side");
  for (const PortMode* port : {&in, &out}) {
    if (port->mode.profile.size() != side_length(box, port->side)) {
      throw Error(ErrorCode::DimensionMismatch, "port mode profile must span its box side");
    }
  }
  detail::RingPins pins(grid, box, {Side::Left, Side::Right, Side::Bottom, Side::Top});
  const cplx out_amp = power_matched_amplitude(in.mode, out.mode) * std::exp(cplx(0.0, output_phase));
  for (int depth = 0; depth < 2; ++depth) {
    pins.set_layer(side_layer(grid, box, out.side, depth),
                   out_amp * std::exp(cplx(0.0, -out.mode.beta * depth)) * out.mode.profile);
  }
  for (int depth = 0; depth < 2; ++depth) {
    pins.set_layer(side_layer(grid, box, in.side, depth),
                   std::exp(cplx(0.0, in.mode.beta * depth)) * in.mode.profile);
  }
  return pins.finish(box);
}

struct CloakOptions {
  double eps_in = 1.0;   // medium on the input (left) side
  double eps_out = 1.0;  // medium on the output (right) side
  double output_phase = 0.0;
  std::vector<bool> channel_mask;  // cells forced to stay as they are (open channels)
};

struct CloakObjective {
  DesignObjective objective;
  std::vector<bool> vary;
};

/// Plane wave in on the left, the same plane wave out on the right as though
/// the box were empty; the object (and any channel cells) are frozen.
inline CloakObjective build_cloak_objective(const GridSpec& grid, const Rect& box,
                                            const std::vector<bool>& object_mask, const CloakOptions& opt = {}) {
  if (!grid.boundary_y().is_periodic()) {
    throw Error(ErrorCode::RequiresPeriodic, "cloak objectives need periodic y boundaries");
  }
  detail::check_box(grid, box);
  if (box.y0 != 0 || box.height != grid.ny()) {
    throw Error(ErrorCode::DimensionMismatch, "cloak design box must span the full periodic height");
  }
  if (static_cast<int>(object_mask.size()) != grid.cells() ||
      (!opt.channel_mask.empty() && static_cast<int>(opt.channel_mask.size()) != grid.cells())) {
    throw Error(ErrorCode::DimensionMismatch, "masks must cover every cell");
  }
  const ModeProfile in = plane_wave_profile(grid, opt.eps_in);
  const ModeProfile out = plane_wave_profile(grid, opt.eps_out);
  detail::RingPins pins(grid, box, {Side::Left, Side::Right});
  for (int depth = 0; depth < 2; ++depth) {
    pins.set_layer(side_layer(grid, box, Side::Left, depth), std::exp(cplx(0.0, in.beta * depth)) * in.profile);
  }
  const cplx out_amp = power_matched_amplitude(in, out) *
                       std::exp(cplx(0.0, in.beta * (box.width - 1) + opt.output_phase));
  for (int depth = 0; depth < 2; ++depth) {
    pins.set_layer(side_layer(grid, box, Side::Right, depth),
                   out_amp * std::exp(cplx(0.0, -out.beta * depth)) * out.profile);
  }

  CloakObjective result{pins.finish(box), std::vector<bool>(grid.cells(), false)};
  for (int c : window_cells(grid, box)) {
    const bool channel = !opt.channel_mask.empty() && opt.channel_mask[c];
    result.vary[c] = !object_mask[c] && !channel;
  }
  return result;
}

/// Field on the two layers of one box side (outer = the outermost column).
struct LayerPair {
  CVec outer;
  CVec inner;
};

struct MimicTarget {
  LayerPair output;
  // Field on the input layers. Empty means a pure incident plane wave; a
  // target copied from an object's simulation carries the object's reflection
  // here, without which the pinned power balance cannot close.
  std::optional<LayerPair> input;
  int plane_column = 0;  // measurement plane
  CVec plane_target;     // desired field on that plane
  // Lens targets only: the focal row and where it sits.
  int focus_column = -1;
  CVec focus_profile;
};

/// Incident plane wave (or the target's input layers) on the left, the target
/// leaving through the right.
inline DesignObjective build_mimic_objective(const GridSpec& grid, const Rect& box, const MimicTarget& target,
                                             double eps_in = 1.0) {
  if (!grid.boundary_y().is_periodic()) {
    throw Error(ErrorCode::RequiresPeriodic, "mimic objectives need periodic y boundaries");
  }
  detail::check_box(grid, box);
  auto spans = [&](const LayerPair& l) { return l.outer.size() == grid.ny() && l.inner.size() == grid.ny(); };
  if (box.y0 != 0 || box.height != grid.ny() || !spans(target.output) ||
      (target.input && !spans(*target.input))) {
    throw Error(ErrorCode::DimensionMismatch, "mimic box and target must span the full periodic height");
  }
  detail::RingPins pins(grid, box, {Side::Left, Side::Right});
  if (target.input) {
    pins.set_layer(side_layer(grid, box, Side::Left, 0), target.input->outer);
    pins.set_layer(side_layer(grid, box, Side::Left, 1), target.input->inner);
  } else {
    const ModeProfile in = plane_wave_profile(grid, eps_in);
    for (int depth = 0; depth < 2; ++depth) {
      pins.set_layer(side_layer(grid, box, Side::Left, depth), std::exp(cplx(0.0, in.beta * depth)) * in.profile);
    }
  }
  pins.set_layer(side_layer(grid, box, Side::Right, 0), target.output.outer);
  pins.set_layer(side_layer(grid, box, Side::Right, 1), target.output.inner);
  return pins.finish(box);
}

// ---------------------------------------------------------------------------
// Target fields for mimics.

/// Propagates a periodic row of H_z by `distance` cells along +x through a
/// uniform medium, one discrete plane-wave component at a time. Evanescent
/// components decay forward (grow backward) unless dropped.
inline CVec propagate_row(const CVec& row, double omega, double eps, double distance, bool keep_evanescent) {
  const int n = static_cast<int>(row.size());
  Eigen::FFT<double> fft;
  std::vector<cplx> in(row.data(), row.data() + n);
  std::vector<cplx> spec;
  fft.fwd(spec, in);
  for (int m = 0; m < n; ++m) {
    const double sy = std::sin(kPi * m / n);
    const double s = (omega * omega * eps - 4.0 * sy * sy) / 4.0;
    if (s >= 0.0) {
      const double beta = 2.0 * std::asin(std::sqrt(std::min(s, 1.0)));
      spec[m] *= std::exp(cplx(0.0, beta * distance));
    } else if (keep_evanescent) {
      const double kappa = 2.0 * std::asinh(std::sqrt(-s));
      spec[m] *= std::exp(-kappa * distance);
    } else {
      spec[m] = 0.0;
    }
  }
  std::vector<cplx> out;
  fft.inv(out, spec);
  return Eigen::Map<CVec>(out.data(), n);
}

/// Forward power of the propagating part of a periodic row, on the same scale
/// as ModeProfile::unit_power (so a unit-norm plane wave gives sin(beta) / eps).
inline double propagating_power(const CVec& row, double omega, double eps) {
  const int n = static_cast<int>(row.size());
  Eigen::FFT<double> fft;
  std::vector<cplx> in(row.data(), row.data() + n);
  std::vector<cplx> spec;
  fft.fwd(spec, in);
  double power = 0.0;
  for (int m = 0; m < n; ++m) {
    const double sy = std::sin(kPi * m / n);
    const double s = (omega * omega * eps - 4.0 * sy * sy) / 4.0;
    if (s > 0.0) power += std::norm(spec[m]) / n * std::sin(2.0 * std::asin(std::sqrt(std::min(s, 1.0))));
  }
  return power / eps;
}

/// Full-width at half-maximum of |row| around its peak, from the Gaussian
/// (log-quadratic) fit through the peak sample and its two neighbours.
inline double gaussian_fwhm(const CVec& row) {
  const int n = static_cast<int>(row.size());
  Eigen::Index k = 0;
  row.cwiseAbs().maxCoeff(&k);
  const double lm = std::log(std::abs(row[(k + n - 1) % n]));
  const double l0 = std::log(std::abs(row[k]));
  const double lp = std::log(std::abs(row[(k + 1) % n]));
  const double curvature = lm - 2.0 * l0 + lp;  // = -2 a for log|f| = c - a t^2
  if (!(curvature < 0.0)) return 0.0;
  return std::sqrt(-8.0 * std::log(2.0) / curvature);
}

/// Two cells right of the box: the default measurement plane.
inline int default_error_plane(const Rect& box) { return box.x1() + 1; }

/// Target copied from a field (an object's simulated response) on both sides
/// of the box.
inline MimicTarget target_from_field(const FieldState& x, const GridSpec& grid, const Rect& box,
                                     int plane_column) {
  auto column = [&](int i) { return plane_values(x.hz, grid, {Axis::X, i, 0, grid.ny(), +1}); };
  MimicTarget t;
  t.output = {column(box.x1() - 1), column(box.x1() - 2)};
  t.input = LayerPair{column(box.x0), column(box.x0 + 1)};
  t.plane_column = plane_column;
  t.plane_target = column(plane_column);
  return t;
}

/// Gaussian focus of the given FWHM (cells) `depth` cells past the box,
/// carried back to the box through vacuum (propagating components only) and
/// scaled to the power of the unit incident plane wave.
inline MimicTarget lens_target(const GridSpec& grid, const Rect& box, double fwhm, int depth, double center_y,
                               int plane_column) {
  if (!(fwhm > 0.0) || depth < 1) throw Error(ErrorCode::DimensionMismatch, "lens needs fwhm > 0 and depth >= 1");
  const int ny = grid.ny();
  const double w = grid.omega();
  CVec focus(ny);
  const double a = 4.0 * std::log(2.0) / (fwhm * fwhm);
  for (int j = 0; j < ny; ++j) {
    double dy = std::remainder(j + 0.5 - center_y, static_cast<double>(ny));
    focus[j] = std::exp(-a * dy * dy);
  }
  const int outer_col = box.x1() - 1;
  const int focus_col = outer_col + depth;
  CVec outer = propagate_row(focus, w, 1.0, -depth, false);
  const double scale =
      std::sqrt(plane_wave_profile(grid).unit_power() / propagating_power(outer, w, 1.0));
  MimicTarget t;
  t.focus_column = focus_col;
  t.focus_profile = focus;
  t.output.outer = scale * outer;
  t.output.inner = scale * propagate_row(focus, w, 1.0, -(depth + 1), false);
  t.plane_column = plane_column;
  t.plane_target = scale * propagate_row(focus, w, 1.0, plane_column - focus_col, false);
  t.focus_profile *= scale;
  return t;
}

/// Row of Gaussian peaks `separation` cells apart on the measurement plane,
/// carried back to the box with evanescent components kept (near field).
inline MimicTarget mask_target(const GridSpec& grid, const Rect& box, int peaks, double separation,
                               double peak_fwhm, double center_y, int plane_column) {
  if (peaks < 1 || !(peak_fwhm > 0.0)) throw Error(ErrorCode::DimensionMismatch, "mask needs peaks and a width");
  const int ny = grid.ny();
  const double w = grid.omega();
  const double a = 4.0 * std::log(2.0) / (peak_fwhm * peak_fwhm);
  CVec row = CVec::Zero(ny);
  for (int k = 0; k < peaks; ++k) {
    const double yk = center_y + (k - 0.5 * (peaks - 1)) * separation;
    for (int j = 0; j < ny; ++j) {
      const double dy = std::remainder(j + 0.5 - yk, static_cast<double>(ny));
      row[j] += std::exp(-a * dy * dy);
    }
  }
  const int outer_col = box.x1() - 1;
  const int gap = plane_column - outer_col;
  if (gap < 1) throw Error(ErrorCode::DimensionMismatch, "mask plane must lie right of the box");
  const CVec outer = propagate_row(row, w, 1.0, -gap, true);
  const double scale = std::sqrt(plane_wave_profile(grid).unit_power() / propagating_power(outer, w, 1.0));
  MimicTarget t;
  t.output.outer = scale * outer;
  t.output.inner = scale * propagate_row(row, w, 1.0, -(gap + 1), true);
  t.plane_column = plane_column;
  t.plane_target = scale * row;
  return t;
}

}  // namespace wavefirst

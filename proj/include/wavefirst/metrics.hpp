#pragma once

// Device quality measures evaluated on a validation simulation.

#include <cmath>
#include <string>

#include "wavefirst/error.hpp"
#include "wavefirst/modes.hpp"

namespace wavefirst {

struct ModalAmplitudes {
  cplx forward;   // amplitude of exp(+i beta s) at the plane (s = 0)
  cplx backward;  // amplitude of exp(-i beta s)
  double forward_power = 0.0;
  double backward_power = 0.0;
};

struct EfficiencyReport {
  double efficiency = 0.0;
  double input_power = 0.0;
  double output_mode_power = 0.0;
  int measurement_plane = 0;
};

struct ErrorReport {
  double relative_error = 0.0;
  int plane = 0;
};

namespace detail {

inline void require_outside_pml(const GridSpec& grid, const PortPlane& plane, int depth) {
  for (int k = 0; k < depth; ++k) {
    const int along = plane.position + plane.direction * k;
    if (along < 0 || along >= grid.extent(plane.axis)) {
      throw Error(ErrorCode::PlaneInPml, "measurement plane leaves the grid");
    }
    for (int t = plane.lo; t < plane.hi; ++t) {
      const int i = plane.axis == Axis::X ? along : t;
      const int j = plane.axis == Axis::X ? t : along;
      if (grid.in_pml(i, j)) throw Error(ErrorCode::PlaneInPml, "measurement plane overlaps the PML");
    }
  }
}

/// P-weighted projection of the field on the plane onto the mode profile.
inline cplx modal_coefficient(const CVec& field, const GridSpec& grid, const ModeProfile& mode,
                              const PortPlane& plane) {
  cplx num = 0.0;
  double den = 0.0;
  for (int t = plane.lo; t < plane.hi; ++t) {
    const double p = 1.0 / mode.slice_eps[t - plane.lo];
    const cplx phi = mode.profile[t - plane.lo];
    num += p * std::conj(phi) * field[plane.cell(grid, plane.position, t)];
    den += p * std::norm(phi);
  }
  return num / den;
}

}  // namespace detail

/// Splits the mode content at `plane` into forward and backward waves using
/// the plane and the next one in the forward direction.
inline ModalAmplitudes decompose_mode(const FieldState& x, const GridSpec& grid, const ModeProfile& mode,
                                      const PortPlane& plane) {
  if (mode.profile.size() != plane.length()) {
    throw Error(ErrorCode::DimensionMismatch, "mode profile length does not match the plane");
  }
  detail::require_outside_pml(grid, plane, 2);
  const cplx a0 = detail::modal_coefficient(x.hz, grid, mode, plane);
  const cplx a1 = detail::modal_coefficient(x.hz, grid, mode, plane.shifted(1));
  const cplx ep = std::exp(cplx(0.0, mode.beta));
  const cplx em = 1.0 / ep;
  ModalAmplitudes out;
  out.forward = (a1 - a0 * em) / (ep - em);
  out.backward = (a0 * ep - a1) / (ep - em);
  const double unit = std::abs(mode.unit_power());
  out.forward_power = std::norm(out.forward) * unit;
  out.backward_power = std::norm(out.backward) * unit;
  return out;
}

/// Forward power in `mode` at `plane` divided by `input_power` (the forward
/// power of the launched input mode, measured the same way).
inline EfficiencyReport coupling_efficiency(const FieldState& x, const GridSpec& grid, const ModeProfile& mode,
                                            const PortPlane& plane, double input_power) {
  if (!(input_power > 0.0)) throw Error(ErrorCode::DimensionMismatch, "input power must be positive");
  const ModalAmplitudes amp = decompose_mode(x, grid, mode, plane);
  return {amp.forward_power / input_power, input_power, amp.forward_power, plane.position};
}

/// ||x - target|| / ||target|| on a plane, with the global phase of x chosen
/// to minimize the error.
inline ErrorReport relative_error(const FieldState& x, const CVec& target, const GridSpec& grid,
                                  const PortPlane& plane) {
  if (target.size() != plane.length()) {
    throw Error(ErrorCode::DimensionMismatch, "target length does not match the plane");
  }
  const double tn = target.norm();
  if (!(tn > 0.0)) throw Error(ErrorCode::ZeroTarget, "target field vanishes on the plane");
  const CVec sim = plane_values(x.hz, grid, plane);
  const double overlap = std::abs(sim.dot(target));
  const double sq = sim.squaredNorm() + tn * tn - 2.0 * overlap;
  return {std::sqrt(std::max(0.0, sq)) / tn, plane.position};
}

}  // namespace wavefirst

#pragma once

// Guided modes of a 1D transverse slice, plane waves, and unidirectional
// mode sources.
//
// For propagation along an axis with H_z = phi(t) exp(i beta n), the discrete
// operator separates into
//   (w^2 - T) phi = lambda P phi,   lambda = 4 sin^2(beta / 2),
// where T = -D diag(p_edge) D is the transverse stencil (edge values averaged
// from cells, hard walls at the slice ends) and P = diag(p). Modes are
// P-orthogonal; that weighted product is also the modal power product.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "wavefirst/error.hpp"
#include "wavefirst/grid.hpp"
#include "wavefirst/physics.hpp"

namespace wavefirst {

struct ModeProfile {
  CVec profile;  // unit L2 norm
  double beta = 0.0;
  int mode_index = 0;
  RVec slice_eps;

  /// Eigenvalue of the separated problem, 4 sin^2(beta / 2).
  double lambda() const {
    const double s = std::sin(beta / 2.0);
    return 4.0 * s * s;
  }

  /// sum_t p(t) |phi(t)|^2, the P-weighted norm of the profile.
  double weighted_norm() const {
    double n = 0.0;
    for (int t = 0; t < profile.size(); ++t) n += std::norm(profile[t]) / slice_eps[t];
    return n;
  }

  /// Power carried by a unit-amplitude forward wave in this mode (up to the
  /// common 1/(2w) factor, which cancels in every ratio).
  double unit_power() const { return std::sin(beta) * weighted_norm(); }
};

namespace detail {

inline Eigen::MatrixXd transverse_operator(const RVec& p) {
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double below = k == 0 ? p[0] : 0.5 * (p[k - 1] + p[k]);
    const double above = k == n - 1 ? p[n - 1] : 0.5 * (p[k] + p[k + 1]);
    t(k, k) = below + above;
    if (k + 1 < n) {
      t(k, k + 1) = -above;
      t(k + 1, k) = -above;
    }
  }
  return t;
}

/// Unit norm, largest-magnitude entry real and positive.
inline CVec normalize_profile(const RVec& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  const double sign = v[arg] < 0 ? -1.0 : 1.0;
  return (sign * v / v.norm()).cast<cplx>();
}

}  // namespace detail

/// Every guided mode of the slice, ordered by decreasing beta.
inline std::vector<ModeProfile> guided_modes(const RVec& slice_eps, double omega) {
  const int n = static_cast<int>(slice_eps.size());
  if (n < 3) throw Error(ErrorCode::DimensionMismatch, "mode slice needs at least 3 cells");
  for (int k = 0; k < n; ++k) {
    if (slice_eps[k] == 0.0 || !std::isfinite(slice_eps[k])) {
      throw Error(ErrorCode::DimensionMismatch, "slice permittivity must be finite and nonzero");
    }
  }
  const RVec p = slice_eps.cwiseInverse();
  const Eigen::MatrixXd t = detail::transverse_operator(p);
  const Eigen::MatrixXd lhs = omega * omega * Eigen::MatrixXd::Identity(n, n) - t;
  const double clad = std::max(slice_eps[0], slice_eps[n - 1]);
  const double lambda_min = omega * omega * clad;

  struct Candidate {
    double lambda;
    RVec vec;
  };
  std::vector<Candidate> found;
  if (p.minCoeff() > 0.0) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(lhs, Eigen::MatrixXd(p.asDiagonal()));
    for (int k = 0; k < n; ++k) found.push_back({es.eigenvalues()[k], es.eigenvectors().col(k)});
  } else {
    // Metals make P indefinite: fall back to the nonsymmetric form P^-1 (w^2 - T).
    Eigen::EigenSolver<Eigen::MatrixXd> es(p.cwiseInverse().asDiagonal() * lhs);
    for (int k = 0; k < n; ++k) {
      const cplx lam = es.eigenvalues()[k];
      if (std::abs(lam.imag()) > 1e-9 * std::max(1.0, std::abs(lam))) continue;
      Eigen::VectorXcd v = es.eigenvectors().col(k);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      v /= v[arg] / std::abs(v[arg]);
      found.push_back({lam.real(), v.real()});
    }
  }

  std::vector<ModeProfile> modes;
  for (const Candidate& c : found) {
    if (c.lambda > lambda_min && c.lambda < 4.0) {
      ModeProfile m;
      m.profile = detail::normalize_profile(c.vec);
      m.beta = 2.0 * std::asin(std::sqrt(c.lambda) / 2.0);
      m.slice_eps = slice_eps;
      modes.push_back(std::move(m));
    }
  }
  std::sort(modes.begin(), modes.end(),
            [](const ModeProfile& a, const ModeProfile& b) { return a.beta > b.beta; });
  for (int k = 0; k < static_cast<int>(modes.size()); ++k) modes[k].mode_index = k;
  return modes;
}

inline ModeProfile solve_waveguide_mode(const RVec& slice_eps, double omega, int mode_index) {
  std::vector<ModeProfile> modes = guided_modes(slice_eps, omega);
  if (mode_index < 0 || mode_index >= static_cast<int>(modes.size())) {
    throw Error(ErrorCode::NoSuchMode, "requested mode " + std::to_string(mode_index) + " but the slice guides " +
                                           std::to_string(modes.size()) + " mode(s)");
  }
  return modes[mode_index];
}

/// Residual of the separated mode equation, ||(w^2 - T) phi - lambda P phi||.
inline double mode_equation_residual(const ModeProfile& m, double omega) {
  const RVec p = m.slice_eps.cwiseInverse();
  const RVec phi = m.profile.real();
  const Eigen::MatrixXd t = detail::transverse_operator(p);
  return (omega * omega * phi - t * phi - m.lambda() * p.cwiseProduct(phi)).norm();
}

/// Propagation constant of a plane wave in a uniform medium, from the Yee
/// dispersion relation 2 sin(beta / 2) = w sqrt(eps).
inline double plane_wave_beta(double omega, double eps) {
  const double s = omega * std::sqrt(eps) / 2.0;
  if (!(eps > 0.0) || s >= 1.0) {
    throw Error(ErrorCode::NoSuchMode, "no propagating plane wave for eps = " + std::to_string(eps));
  }
  return 2.0 * std::asin(s);
}

/// Normally incident plane wave across the full periodic y extent.
inline ModeProfile plane_wave_profile(const GridSpec& grid, double eps = 1.0) {
  if (!grid.boundary_y().is_periodic()) {
    throw Error(ErrorCode::RequiresPeriodic, "plane-wave modes need periodic y boundaries");
  }
  ModeProfile m;
  m.profile = CVec::Constant(grid.ny(), 1.0 / std::sqrt(static_cast<double>(grid.ny())));
  m.beta = plane_wave_beta(grid.omega(), eps);
  m.slice_eps = RVec::Constant(grid.ny(), eps);
  return m;
}

/// A plane of cells transverse to a propagation axis: cells at `position`
/// along `axis` spanning [lo, hi) across it, with `direction` = +1 or -1 the
/// sense of forward propagation.
struct PortPlane {
  Axis axis = Axis::X;
  int position = 0;
  int lo = 0;
  int hi = 0;
  int direction = +1;

  int length() const { return hi - lo; }

  int cell(const GridSpec& grid, int along, int across) const {
    return axis == Axis::X ? grid.cell(along, across) : grid.cell(across, along);
  }

  /// Same plane shifted `steps` cells forward.
  PortPlane shifted(int steps) const {
    PortPlane q = *this;
    q.position += direction * steps;
    return q;
  }
};

inline RVec slice_eps(const Structure& s, const GridSpec& grid, const PortPlane& plane) {
  RVec eps(plane.length());
  for (int t = plane.lo; t < plane.hi; ++t) eps[t - plane.lo] = 1.0 / s.p[plane.cell(grid, plane.position, t)];
  return eps;
}

/// Cell values of a field on a plane.
inline CVec plane_values(const CVec& field, const GridSpec& grid, const PortPlane& plane) {
  CVec v(plane.length());
  for (int t = plane.lo; t < plane.hi; ++t) v[t - plane.lo] = field[plane.cell(grid, plane.position, t)];
  return v;
}

/// Two parallel current sheets phased by beta so that only a forward wave is
/// launched. The forward wave has modal amplitude `amplitude` at `reference`
/// (a position along the axis) and phase exp(i beta (n - reference)) in the
/// direction of travel.
inline SourceSpec mode_source(const ModeProfile& mode, const PortPlane& plane, const GridSpec& grid,
                              cplx amplitude = 1.0, int reference = 0) {
  if (mode.profile.size() != plane.length()) {
    throw Error(ErrorCode::DimensionMismatch, "mode profile length does not match the port plane");
  }
  const int dir = plane.direction;
  for (int k = 0; k <= 2; ++k) {
    for (int t = plane.lo; t < plane.hi; ++t) {
      const int along = plane.position + dir * k;
      if (along < 0 || along >= grid.extent(plane.axis)) {
        throw Error(ErrorCode::PortInPml, "source sheets fall outside the grid");
      }
      const int i = plane.axis == Axis::X ? along : t;
      const int j = plane.axis == Axis::X ? t : along;
      if (grid.in_pml(i, j)) throw Error(ErrorCode::PortInPml, "source plane overlaps the PML");
    }
  }

  const double beta = mode.beta;
  const cplx phase = std::exp(cplx(0.0, -beta));
  const cplx green = cplx(0.0, 1.0) / (2.0 * std::sin(beta));
  const cplx launch = green * (1.0 - phase) * (1.0 - phase * phase);
  const cplx v0 = amplitude * std::exp(cplx(0.0, beta * dir * (plane.position - reference))) / launch;
  const cplx v1 = -v0 * phase;

  // A J_y sheet on the edge between columns n and n + 1 forces +v at n and -v
  // at n + 1; a J_x sheet forces the opposite signs, hence axis_sign.
  const double axis_sign = plane.axis == Axis::X ? 1.0 : -1.0;
  SourceSpec src = SourceSpec::zero(grid);
  auto edge = [&](int low_cell_along, int t) {
    return plane.axis == Axis::X ? grid.ey_edge(low_cell_along, t) : grid.ex_edge(t, low_cell_along);
  };
  for (int t = plane.lo; t < plane.hi; ++t) {
    const cplx phi = mode.profile[t - plane.lo];
    if (dir > 0) {
      src.j[edge(plane.position, t)] += axis_sign * v0 * phi;
      src.j[edge(plane.position + 1, t)] += axis_sign * v1 * phi;
    } else {
      src.j[edge(plane.position - 1, t)] += -axis_sign * v0 * phi;
      src.j[edge(plane.position - 2, t)] += -axis_sign * v1 * phi;
    }
  }
  return src;
}

}  // namespace wavefirst

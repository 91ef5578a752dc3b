#pragma once

// Box-constrained linear least squares over real variables,
//
//   minimize ||B p - d||^2  subject to lo <= p <= hi,
//
// posed through its normal form f(p) = p'Hp - 2c'p + |d|^2 with
// H = Re(B^H B), c = Re(B^H d). Solved by a projected Newton method: a
// projected-gradient (Cauchy) step identifies the active set, then a Newton
// step on the free variables with a projected Armijo search. Every accepted
// step decreases f, so the result never worsens the starting point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCholesky>

#include "wavefirst/types.hpp"

namespace wavefirst {

struct BoxQp {
  RealSparse h;
  RVec c;
  double d_squared = 0.0;
};

struct BoxQpOptions {
  double tolerance = 0.0;  // absolute bound on the projected-gradient norm
  int max_iterations = 2000;
};

struct BoxQpResult {
  RVec p;
  double objective = 0.0;
  double projected_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Builds the normal form from stacked complex blocks B_k p ~ d_k.
inline BoxQp make_box_qp(const std::vector<SparseOperator>& blocks, const std::vector<CVec>& rhs) {
  BoxQp qp;
  const Eigen::Index n = blocks.empty() ? 0 : blocks.front().cols();
  qp.h = RealSparse(n, n);
  qp.c = RVec::Zero(n);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const SparseOperator bh = blocks[k].adjoint();
    const SparseOperator gram = bh * blocks[k];
    qp.h += RealSparse(gram.real());
    qp.c += (bh * rhs[k]).real();
    qp.d_squared += rhs[k].squaredNorm();
  }
  qp.h.makeCompressed();
  return qp;
}

inline double box_qp_objective(const BoxQp& qp, const RVec& p) {
  return std::max(0.0, p.dot(qp.h * p) - 2.0 * qp.c.dot(p) + qp.d_squared);
}

/// Gradient of f: 2 (H p - c).
inline RVec box_qp_gradient(const BoxQp& qp, const RVec& p) { return 2.0 * (qp.h * p - qp.c); }

/// Norm of the gradient with components pushing out of an active bound removed.
inline double projected_gradient_norm(const RVec& g, const RVec& p, const RVec& lo, const RVec& hi) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double gi = g[i];
    if (p[i] <= lo[i]) gi = std::min(gi, 0.0);
    if (p[i] >= hi[i]) gi = std::max(gi, 0.0);
    s += gi * gi;
  }
  return std::sqrt(s);
}

namespace detail {

inline RVec clamp(const RVec& p, const RVec& lo, const RVec& hi) { return p.cwiseMax(lo).cwiseMin(hi); }

/// Exact change f(p + s) - f(p) = g's + s'Hs, free of the cancellation in f
/// itself when the residual is small.
inline double objective_change(const BoxQp& qp, const RVec& g, const RVec& s) {
  return g.dot(s) + s.dot(qp.h * s);
}

/// Projected Armijo search along p + t * dir starting at t = t0. On success
/// `out` holds the new point and `change` the (negative) change in f.
inline bool projected_search(const BoxQp& qp, const RVec& lo, const RVec& hi, const RVec& p, const RVec& g,
                             const RVec& dir, double t0, RVec& out, double& change) {
  double t = t0;
  for (int k = 0; k < 50; ++k, t *= 0.5) {
    RVec trial = clamp(p + t * dir, lo, hi);
    const RVec s = trial - p;
    const double slope = g.dot(s);
    if (slope >= 0.0) continue;
    const double df = objective_change(qp, g, s);
    if (df <= 1e-4 * slope) {
      out = std::move(trial);
      change = df;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline BoxQpResult solve_box_qp(const BoxQp& qp, const RVec& lo, const RVec& hi, const RVec& start,
                                const BoxQpOptions& opt = {}) {
  const Eigen::Index n = start.size();
  BoxQpResult res;
  res.p = detail::clamp(start, lo, hi);
  double hmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) hmax = std::max(hmax, qp.h.coeff(i, i));
  const double shift = 1e-13 * hmax + std::numeric_limits<double>::min();

  int stalls = 0;
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    RVec g = box_qp_gradient(qp, res.p);
    res.projected_gradient = projected_gradient_norm(g, res.p, lo, hi);
    if (res.projected_gradient <= opt.tolerance || n == 0) {
      res.converged = true;
      break;
    }
    // Cauchy step along -g from the exact minimizer of the unconstrained ray.
    const double gg = g.squaredNorm();
    const double ghg = 2.0 * g.dot(qp.h * g);
    const double alpha = ghg > 0.0 ? gg / ghg : 1.0;
    RVec cauchy;
    double change = 0.0;
    double decrease = 0.0;
    if (detail::projected_search(qp, lo, hi, res.p, g, -g, alpha, cauchy, change)) {
      res.p = std::move(cauchy);
      decrease -= change;
      g = box_qp_gradient(qp, res.p);
    }

    // Newton step on the variables not held at a bound.
    std::vector<int> free;
    std::vector<int> position(n, -1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool held = (res.p[i] <= lo[i] && g[i] > 0.0) || (res.p[i] >= hi[i] && g[i] < 0.0);
      if (!held) {
        position[i] = static_cast<int>(free.size());
        free.push_back(static_cast<int>(i));
      }
    }
    if (!free.empty()) {
      std::vector<Eigen::Triplet<double>> t;
      for (int col : free) {
        for (RealSparse::InnerIterator it(qp.h, col); it; ++it) {
          if (int r = position[it.row()]; r >= 0) t.emplace_back(r, position[col], it.value());
        }
      }
      const int nf = static_cast<int>(free.size());
      RealSparse hff(nf, nf);
      hff.setFromTriplets(t.begin(), t.end());
      for (int k = 0; k < nf; ++k) hff.coeffRef(k, k) += shift;
      Eigen::SimplicialLDLT<RealSparse> ldlt(hff);
      if (ldlt.info() == Eigen::Success) {
        RVec gf(nf);
        for (int k = 0; k < nf; ++k) gf[k] = 0.5 * g[free[k]];
        const RVec step_f = ldlt.solve(-gf);
        RVec step = RVec::Zero(n);
        for (int k = 0; k < nf; ++k) step[free[k]] = step_f[k];
        RVec newton;
        if (step.allFinite() && detail::projected_search(qp, lo, hi, res.p, g, step, 1.0, newton, change)) {
          res.p = std::move(newton);
          decrease -= change;
        }
      }
    }

    if (!(decrease > 0.0)) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
  }
  res.objective = box_qp_objective(qp, res.p);
  res.projected_gradient = projected_gradient_norm(box_qp_gradient(qp, res.p), res.p, lo, hi);
  res.converged = res.projected_gradient <= opt.tolerance;
  return res;
}

}  // namespace wavefirst

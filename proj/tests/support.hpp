#pragma once

// Shared fixtures for the test binaries.

#include <complex>
#include <random>

#include "wavefirst/modes.hpp"
#include "wavefirst/physics.hpp"

namespace testing_support {

using namespace wavefirst;

inline CVec random_complex(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  CVec v(n);
  for (int k = 0; k < n; ++k) v[k] = cplx(g(rng), g(rng));
  return v;
}

inline RVec random_uniform(int n, double lo, double hi, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  RVec v(n);
  for (int k = 0; k < n; ++k) v[k] = u(rng);
  return v;
}

inline Structure random_structure(const GridSpec& g, std::mt19937& rng) {
  Structure s = Structure::uniform(g, 1.0);
  s.p = random_uniform(g.cells(), s.p_lo, s.p_hi, rng);
  s.vary.assign(g.cells(), true);
  return s;
}

/// Waveguide along x: cells with |y - centre| < width / 2 get eps_core.
inline Structure straight_guide(const GridSpec& g, double eps_core, int width, double eps_clad = 1.0) {
  Structure s = Structure::uniform(g, 1.0 / eps_clad);
  const int lo = g.ny() / 2 - width / 2;
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = lo; j < lo + width; ++j) s.p[g.cell(i, j)] = 1.0 / eps_core;
  }
  return s;
}

/// Slice of a symmetric slab centred in `n` cells.
inline RVec slab_slice(int n, int width, double eps_core, double eps_clad = 1.0) {
  RVec eps = RVec::Constant(n, eps_clad);
  const int lo = n / 2 - width / 2;
  eps.segment(lo, width).setConstant(eps_core);
  return eps;
}

}  // namespace testing_support

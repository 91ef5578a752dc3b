#include <gtest/gtest.h>

#include "support.hpp"
#include "wavefirst/metrics.hpp"
#include "wavefirst/solver.hpp"

using namespace wavefirst;
using namespace testing_support;

namespace {

/// Guide along x with a dielectric bump in the middle that scatters power
/// into other modes, radiation and reflection.
struct ScatterSetup {
  GridSpec grid{100, 60, 25.0, Boundary::absorbing(), Boundary::absorbing()};
  YeeOperators ops = YeeOperators::build(grid);
  Structure s = straight_guide(grid, 12.25, 14);
  PortPlane in{Axis::X, 20, 10, 50, +1};
  PortPlane out{Axis::X, 78, 10, 50, +1};
  std::vector<ModeProfile> modes;

  ScatterSetup() {
    for (int i = 45; i < 55; ++i) {
      for (int j = 30; j < 40; ++j) s.p[grid.cell(i, j)] = 1.0 / 6.0;
    }
    modes = guided_modes(slice_eps(s, grid, in), grid.omega());
  }

  FieldState run(cplx amplitude) const {
    return simulate(s, mode_source(modes[0], in, grid, amplitude, in.position), ops).field;
  }

  double input_power(const FieldState& x) const {
    return decompose_mode(x, grid, modes[0], in.shifted(4)).forward_power;
  }
};

}  // namespace

TEST(Efficiency, InvariantUnderSourceScaling) {
  ScatterSetup g;
  const FieldState x1 = g.run(1.0);
  const FieldState x2 = g.run(cplx(-2.5, 0.7));
  const EfficiencyReport e1 = coupling_efficiency(x1, g.grid, g.modes[0], g.out, g.input_power(x1));
  const EfficiencyReport e2 = coupling_efficiency(x2, g.grid, g.modes[0], g.out, g.input_power(x2));
  EXPECT_GT(e1.efficiency, 0.05);
  EXPECT_LT(e1.efficiency, 0.999);
  EXPECT_NEAR(e2.efficiency, e1.efficiency, 1e-10);
  EXPECT_EQ(e1.measurement_plane, 78);
  EXPECT_NEAR(e1.efficiency, e1.output_mode_power / e1.input_power, 1e-15);
}

TEST(Efficiency, InvariantUnderModePhaseAndScale) {
  ScatterSetup g;
  const FieldState x = g.run(1.0);
  const double pin = g.input_power(x);
  ModeProfile m = g.modes[1];
  const double e = coupling_efficiency(x, g.grid, m, g.out, pin).efficiency;
  m.profile *= cplx(0.0, -3.0);
  EXPECT_NEAR(coupling_efficiency(x, g.grid, m, g.out, pin).efficiency, e, 1e-12);
}

TEST(Efficiency, GuidedModesAndRadiationBoundedByOne) {
  ScatterSetup g;
  const FieldState x = g.run(1.0);
  const double pin = g.input_power(x);
  double total = 0.0;
  for (const ModeProfile& m : guided_modes(slice_eps(g.s, g.grid, g.out), g.grid.omega())) {
    total += coupling_efficiency(x, g.grid, m, g.out, pin).efficiency;
  }
  const ModalAmplitudes reflected = decompose_mode(x, g.grid, g.modes[0], {Axis::X, 42, 10, 50, -1});
  EXPECT_GT(total, 0.3);
  EXPECT_LE(total + reflected.forward_power / pin, 1.0 + 1e-3);
}

TEST(Efficiency, PlaneInPmlRejected) {
  ScatterSetup g;
  const FieldState x = g.run(1.0);
  for (const PortPlane& bad : {PortPlane{Axis::X, 89, 10, 50, +1}, PortPlane{Axis::X, 95, 10, 50, +1},
                               PortPlane{Axis::X, 60, 5, 45, +1}}) {
    try {
      coupling_efficiency(x, g.grid, g.modes[0], bad, 1.0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::PlaneInPml);
    }
  }
}

TEST(Decompose, SeparatesSyntheticWaves) {
  // Exact forward + backward superposition of the mode.
  GridSpec grid(40, 30, 25.0, Boundary::absorbing({5}), Boundary::absorbing({5}));
  Structure s = straight_guide(grid, 12.25, 8);
  const PortPlane plane{Axis::X, 18, 5, 25, +1};
  const ModeProfile m = solve_waveguide_mode(slice_eps(s, grid, plane), grid.omega(), 0);
  const cplx f(0.8, -0.3);
  const cplx b(0.1, 0.25);
  CVec hz = CVec::Zero(grid.cells());
  for (int i = 0; i < grid.nx(); ++i) {
    const double n = i - plane.position;
    for (int t = plane.lo; t < plane.hi; ++t) {
      hz[grid.cell(i, t)] = m.profile[t - plane.lo] *
                            (f * std::exp(cplx(0.0, m.beta * n)) + b * std::exp(cplx(0.0, -m.beta * n)));
    }
  }
  const ModalAmplitudes a = decompose_mode(FieldState{hz}, grid, m, plane);
  EXPECT_LT(std::abs(a.forward - f), 1e-13);
  EXPECT_LT(std::abs(a.backward - b), 1e-13);
  EXPECT_NEAR(a.forward_power, std::norm(f) * m.unit_power(), 1e-13);
}

TEST(RelativeError, ExactTargetIsZero) {
  GridSpec grid(30, 20, 25.0, Boundary::absorbing({5}), Boundary::periodic());
  std::mt19937 rng(6);
  const FieldState x{random_complex(grid.cells(), rng)};
  const PortPlane plane{Axis::X, 17, 0, 20, +1};
  const CVec target = plane_values(x.hz, grid, plane);
  EXPECT_NEAR(relative_error(x, target, grid, plane).relative_error, 0.0, 1e-7);
  EXPECT_EQ(relative_error(x, target, grid, plane).plane, 17);
  EXPECT_NEAR(relative_error(FieldState{2.0 * x.hz}, target, grid, plane).relative_error, 1.0, 1e-12);
}

TEST(RelativeError, PhaseInvariant) {
  GridSpec grid(30, 20, 25.0, Boundary::absorbing({5}), Boundary::periodic());
  std::mt19937 rng(16);
  const FieldState x{random_complex(grid.cells(), rng)};
  const PortPlane plane{Axis::X, 12, 0, 20, +1};
  const CVec target = random_complex(20, rng);
  const double e = relative_error(x, target, grid, plane).relative_error;
  for (double theta : {0.4, 2.2, -1.3}) {
    const FieldState rotated{std::exp(cplx(0.0, theta)) * x.hz};
    EXPECT_NEAR(relative_error(rotated, target, grid, plane).relative_error, e, 1e-12);
  }
  // Phase alignment never does worse than the raw difference.
  const double raw = (plane_values(x.hz, grid, plane) - target).norm() / target.norm();
  EXPECT_LE(e, raw + 1e-15);
}

TEST(RelativeError, ZeroTargetRejected) {
  GridSpec grid(30, 20, 25.0, Boundary::absorbing({5}), Boundary::periodic());
  const FieldState x{CVec::Ones(grid.cells())};
  try {
    relative_error(x, CVec::Zero(20), grid, {Axis::X, 12, 0, 20, +1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroTarget);
  }
}

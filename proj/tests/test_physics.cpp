#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "wavefirst/physics.hpp"

using namespace wavefirst;
using namespace testing_support;

namespace {

GridSpec periodic_grid(int nx, int ny, double lambda = 25.0) {
  return GridSpec(nx, ny, lambda, Boundary::periodic(), Boundary::periodic());
}

GridSpec pml_grid() {
  return GridSpec(32, 24, 25.0, Boundary::absorbing({6}), Boundary::absorbing({6}));
}

}  // namespace

TEST(AssembleA, PlaneWaveEigenRelation) {
  GridSpec g = periodic_grid(32, 32);
  YeeOperators ops = YeeOperators::build(g);
  const SparseOperator a = assemble_A(Structure::uniform(g, 1.0), ops);
  const double w2 = g.omega() * g.omega();
  for (int m : {1, 3, 7, 16}) {
    const double k = 2.0 * kPi * m / 32.0;
    for (Axis axis : {Axis::X, Axis::Y}) {
      CVec x(g.cells());
      for (int i = 0; i < 32; ++i) {
        for (int j = 0; j < 32; ++j) x[g.cell(i, j)] = std::exp(cplx(0.0, k * (axis == Axis::X ? i : j)));
      }
      const double s = std::sin(k / 2.0);
      const double eig = 4.0 * s * s - w2;
      EXPECT_LT((a * x - eig * x).cwiseAbs().maxCoeff(), 1e-12) << "m=" << m;
    }
  }
}

TEST(AssembleA, SquareWithGridSize) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  const SparseOperator a = assemble_A(Structure::uniform(g, 0.5), ops);
  EXPECT_EQ(a.rows(), g.cells());
  EXPECT_EQ(a.cols(), g.cells());
}

TEST(AssembleA, RejectsWrongStructureLength) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s = Structure::uniform(g, 1.0);
  s.p.resize(10);
  try {
    assemble_A(s, ops);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(AssembleA, ChangesOnlyNearModifiedCell) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s1 = Structure::uniform(g, 0.4);
  Structure s2 = s1;
  const int ci = 15;
  const int cj = 11;
  s2.p[g.cell(ci, cj)] = 0.9;
  const SparseOperator diff = assemble_A(s2, ops) - assemble_A(s1, ops);
  for (int col = 0; col < diff.outerSize(); ++col) {
    for (SparseOperator::InnerIterator it(diff, col); it; ++it) {
      if (it.value() == cplx(0.0)) continue;
      const int r = static_cast<int>(it.row());
      // Both the row and the column must lie in the 3x3 block around the cell
      // (edges of the cell touch it and its four neighbours).
      for (int c : {r, col}) {
        EXPECT_LE(std::abs(g.cell_x(c) - ci) + std::abs(g.cell_y(c) - cj), 2);
      }
    }
  }
}

TEST(AssembleA, LinearInP) {
  std::mt19937 rng(7);
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s1 = random_structure(g, rng);
  Structure s2 = random_structure(g, rng);
  const double alpha = 0.3;
  const double beta = -1.7;
  Structure mix = s1;
  mix.p = alpha * s1.p + beta * s2.p;
  const SparseOperator w2i = g.omega() * g.omega() * identity_operator(g.cells());
  const SparseOperator lhs = assemble_A(mix, ops) + w2i;
  const SparseOperator rhs = alpha * (assemble_A(s1, ops) + w2i) + beta * (assemble_A(s2, ops) + w2i);
  const CVec probe = random_complex(g.cells(), rng);
  EXPECT_LT((lhs * probe - rhs * probe).norm(), 1e-12 * (rhs * probe).norm());
}

TEST(AssembleB, ZeroSourceGivesZero) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  EXPECT_EQ(assemble_b(Structure::uniform(g, 0.3), SourceSpec::zero(g), ops).norm(), 0.0);
}

TEST(AssembleB, LinearInPAndJ) {
  std::mt19937 rng(11);
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s = random_structure(g, rng);
  SourceSpec src{random_complex(g.edges(), rng)};
  const CVec b = assemble_b(s, src, ops);
  Structure s2 = s;
  s2.p *= 2.0;
  EXPECT_LT((assemble_b(s2, src, ops) - 2.0 * b).norm(), 1e-14 * b.norm());
  SourceSpec src3{cplx(0.0, 3.0) * src.j};
  EXPECT_LT((assemble_b(s, src3, ops) - cplx(0.0, 3.0) * b).norm(), 1e-14 * b.norm());
}

TEST(AssembleB, SingleEdgeSourceIsLocal) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  for (int e : {g.ex_edge(12, 9), g.ey_edge(20, 14)}) {
    SourceSpec src = SourceSpec::zero(g);
    src.j[e] = 1.0;
    const CVec b = assemble_b(Structure::uniform(g, 0.5), src, ops);
    int support = 0;
    for (int c = 0; c < g.cells(); ++c) support += b[c] != cplx(0.0);
    EXPECT_EQ(support, 2);
  }
}

TEST(AssembleBx, ZeroAndConstantFieldsGiveZeroOperator) {
  GridSpec g = periodic_grid(12, 10);
  YeeOperators ops = YeeOperators::build(g);
  Structure s = Structure::uniform(g, 0.5);
  s.vary.assign(g.cells(), true);
  const SourceSpec none = SourceSpec::zero(g);
  const SparseOperator b0 = assemble_B(FieldState{CVec::Zero(g.cells())}, none, s, ops);
  EXPECT_EQ(b0.cwiseAbs().sum(), 0.0);
  const SparseOperator bc = assemble_B(FieldState{CVec::Constant(g.cells(), cplx(2.0, -1.0))}, none, s, ops);
  EXPECT_EQ(bc.cwiseAbs().sum(), 0.0);
}

TEST(AssembleBx, ShapeFollowsVaryMask) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s = Structure::uniform(g, 0.5);
  for (int c = 0; c < g.cells(); c += 3) s.vary[c] = true;
  const SparseOperator b = assemble_B(FieldState{CVec::Ones(g.cells())}, SourceSpec::zero(g), s, ops);
  EXPECT_EQ(b.rows(), g.cells());
  EXPECT_EQ(b.cols(), s.vary_count());
}

TEST(AssembleD, ScalesWithOmegaSquared) {
  GridSpec g = pml_grid();
  CVec e = CVec::Zero(g.cells());
  e[17] = 1.0;
  const double w = g.omega();
  EXPECT_EQ(assemble_d(FieldState{e}, w)[17], cplx(w * w));
  EXPECT_EQ(assemble_d(FieldState{e}, w).norm(), w * w);
  EXPECT_EQ(assemble_d(FieldState{CVec::Zero(g.cells())}, w).norm(), 0.0);
  std::mt19937 rng(3);
  const FieldState x{random_complex(g.cells(), rng)};
  EXPECT_LT((assemble_d(x, 2 * w) - 4.0 * assemble_d(x, w)).norm(), 1e-15 * x.hz.norm());
}

TEST(Bilinear, IdentityHoldsEntrywise) {
  std::mt19937 rng(2024);
  for (const GridSpec& g : {pml_grid(), periodic_grid(16, 12)}) {
    YeeOperators ops = YeeOperators::build(g);
    for (int trial = 0; trial < 5; ++trial) {
      Structure s = random_structure(g, rng);
      const FieldState x{random_complex(g.cells(), rng)};
      const SourceSpec src{random_complex(g.edges(), rng)};
      const CVec lhs = assemble_A(s, ops) * x.hz - assemble_b(s, src, ops);
      const CVec rhs = assemble_B_full(x, src, ops) * s.p.cast<cplx>() - assemble_d(x, g.omega());
      const double scale = assemble_b(s, src, ops).norm() + assemble_d(x, g.omega()).norm();
      EXPECT_LT((lhs - rhs).norm(), 1e-12 * scale);
    }
  }
}

TEST(Bilinear, FrozenCellsMoveToRightHandSide) {
  std::mt19937 rng(5);
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s = random_structure(g, rng);
  for (int c = 0; c < g.cells(); ++c) s.vary[c] = (c % 5) != 0;
  const FieldState x{random_complex(g.cells(), rng)};
  const SourceSpec src{random_complex(g.edges(), rng)};

  const SparseOperator full = assemble_B_full(x, src, ops);
  const SparseOperator bv = assemble_B(x, src, s, ops);
  std::vector<int> frozen;
  for (int c = 0; c < g.cells(); ++c) {
    if (!s.vary[c]) frozen.push_back(c);
  }
  RVec pv(s.vary_count());
  RVec pf(static_cast<int>(frozen.size()));
  {
    const auto idx = s.vary_indices();
    for (int k = 0; k < pv.size(); ++k) pv[k] = s.p[idx[k]];
    for (int k = 0; k < pf.size(); ++k) pf[k] = s.p[frozen[k]];
  }
  const CVec d_tilde = assemble_d(x, g.omega()) - select_columns(full, frozen) * pf.cast<cplx>();
  const double r_split = (bv * pv.cast<cplx>() - d_tilde).norm();
  const double r_phys = physics_residual(s, x, src, ops);
  EXPECT_LT(std::abs(r_split - r_phys), 1e-12 * assemble_b(s, src, ops).norm());
}

TEST(PhysicsResidual, ZeroForZeroFieldAndSource) {
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  EXPECT_EQ(physics_residual(Structure::uniform(g, 0.2), FieldState{CVec::Zero(g.cells())}, SourceSpec::zero(g),
                             ops),
            0.0);
}

TEST(PhysicsResidual, InvariantUnderGlobalPhase) {
  std::mt19937 rng(9);
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s = random_structure(g, rng);
  const FieldState x{random_complex(g.cells(), rng)};
  const SourceSpec src{random_complex(g.edges(), rng)};
  const double r = physics_residual(s, x, src, ops);
  for (double theta : {0.3, 1.9, -2.8}) {
    const cplx ph = std::exp(cplx(0.0, theta));
    const double rr = physics_residual(s, FieldState{ph * x.hz}, SourceSpec{ph * src.j}, ops);
    EXPECT_NEAR(rr, r, 1e-13 * r);
  }
}

TEST(ElectricField, MatchesCurlOfH) {
  std::mt19937 rng(12);
  GridSpec g = pml_grid();
  YeeOperators ops = YeeOperators::build(g);
  Structure s = random_structure(g, rng);
  const FieldState x{random_complex(g.cells(), rng)};
  const SourceSpec src{random_complex(g.edges(), rng)};
  const CVec e = electric_field(s, x, src, ops);
  // Ce E = (A x - b + w^2 x) / (i w).
  const CVec lhs = ops.ce * e;
  const CVec rhs = (residual_vector(s, x, src, ops) + g.omega() * g.omega() * x.hz) / cplx(0.0, g.omega());
  EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

#pragma once

// Forward (FDFD) solve of A(p) x = b(p).

#include <memory>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "wavefirst/error.hpp"
#include "wavefirst/physics.hpp"

namespace wavefirst {

enum class SolveMethod { Auto, Direct, Iterative };

struct SolverOptions {
  SolveMethod method = SolveMethod::Auto;
  double tolerance = 1e-10;
  // Above this many cells Auto switches to the preconditioned iterative solver.
  int direct_limit = 400000;
  int max_iterations = 20000;
  int refinement_steps = 3;
};

struct SolveReport {
  double relative_residual = 0.0;
  SolveMethod method = SolveMethod::Direct;
  int iterations = 0;
  long factor_nonzeros = 0;
};

struct Simulation {
  FieldState field;
  SolveReport report;
};

/// LU factorization of A(p), reusable across right-hand sides.
class FactorizedOperator {
 public:
  explicit FactorizedOperator(SparseOperator a) : a_(std::move(a)) {
    lu_.analyzePattern(a_);
    lu_.factorize(a_);
    if (lu_.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "sparse LU factorization failed: " + lu_.lastErrorMessage());
    }
  }

  const SparseOperator& matrix() const { return a_; }

  /// Solves with a few steps of iterative refinement.
  CVec solve(const CVec& rhs, int refinement_steps, double tolerance) const {
    CVec x = lu_.solve(rhs);
    const double scale = rhs.norm();
    for (int k = 0; k < refinement_steps; ++k) {
      const CVec r = rhs - a_ * x;
      if (r.norm() <= 0.01 * tolerance * scale) break;
      x += lu_.solve(r);
    }
    return x;
  }

  long factor_nonzeros() const { return static_cast<long>(lu_.nnzL() + lu_.nnzU()); }

 private:
  SparseOperator a_;
  Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>> lu_;
};

inline Simulation simulate_system(const SparseOperator& a, const CVec& b, const SolverOptions& opt = {}) {
  const int n = static_cast<int>(a.rows());
  const double bnorm = b.norm();
  Simulation out{{CVec::Zero(n)}, {}};
  if (bnorm == 0.0) return out;

  const bool direct = opt.method == SolveMethod::Direct ||
                      (opt.method == SolveMethod::Auto && n <= opt.direct_limit);
  if (direct) {
    FactorizedOperator lu(a);
    out.field.hz = lu.solve(b, opt.refinement_steps, opt.tolerance);
    out.report.method = SolveMethod::Direct;
    out.report.factor_nonzeros = lu.factor_nonzeros();
  } else {
    Eigen::BiCGSTAB<SparseOperator, Eigen::IncompleteLUT<cplx>> it;
    it.preconditioner().setDroptol(1e-6);
    it.preconditioner().setFillfactor(20);
    it.setTolerance(opt.tolerance);
    it.setMaxIterations(opt.max_iterations);
    it.compute(a);
    out.field.hz = it.solve(b);
    out.report.method = SolveMethod::Iterative;
    out.report.iterations = static_cast<int>(it.iterations());
    if (it.info() != Eigen::Success) {
      throw Error(ErrorCode::NonConvergence,
                  "BiCGSTAB stopped after " + std::to_string(it.iterations()) + " iterations");
    }
  }
  out.report.relative_residual = (a * out.field.hz - b).norm() / bnorm;
  if (!out.field.hz.allFinite() || !(out.report.relative_residual <= opt.tolerance)) {
    throw Error(direct ? ErrorCode::SingularSystem : ErrorCode::NonConvergence,
                "relative residual " + std::to_string(out.report.relative_residual) +
                    " exceeds tolerance; the operator is singular or near a resonance");
  }
  return out;
}

/// FDFD simulation: the field x with A(p) x = b(p). A zero source returns x = 0.
inline Simulation simulate(const Structure& s, const SourceSpec& src, const YeeOperators& ops,
                           const SolverOptions& opt = {}) {
  return simulate_system(assemble_A(s, ops), assemble_b(s, src, ops), opt);
}

}  // namespace wavefirst

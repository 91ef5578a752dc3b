#pragma once

// Objective-first design: alternate between the field sub-problem (fit x to
// p with the boundary values pinned) and the structure sub-problem (fit p to
// x within bounds). Both are convex; each never increases the residual.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "wavefirst/bounded_lsq.hpp"
#include "wavefirst/error.hpp"
#include "wavefirst/objective.hpp"
#include "wavefirst/solver.hpp"

namespace wavefirst {

struct FieldStep {
  FieldState field;
  double residual = 0.0;       // windowed ||A x - b||
  double gradient_norm = 0.0;  // reduced normal-equation gradient at the solution
  double rhs_norm = 0.0;       // ||b - A_pinned x_pinned|| over the residual rows
};

struct FieldOptions {
  int refinement_steps = 6;
};

/// Field sub-problem: minimizes the windowed ||A(p) x - b(p)|| over x with the
/// pinned cells held at their values exactly. Cells outside the window are zero.
inline FieldStep field_subproblem(const Structure& s, const DesignObjective& obj, const YeeOperators& ops,
                                  const SourceSpec& src, const FieldOptions& opt = {}) {
  const GridSpec& grid = ops.grid;
  detail::check_structure(s, grid);
  if (obj.pinned_values.size() != static_cast<Eigen::Index>(obj.pinned_indices.size())) {
    throw Error(ErrorCode::DimensionMismatch, "pinned values and indices differ in length");
  }
  if (!obj.pinned_values.allFinite()) throw Error(ErrorCode::DimensionMismatch, "pinned values must be finite");

  const Rect window = effective_window(grid, obj.window);
  std::vector<int> role(grid.cells(), -1);  // -1 outside, -2 pinned, >= 0 free slot
  for (int c : window_cells(grid, window)) role[c] = 0;
  for (int c : obj.pinned_indices) {
    if (c < 0 || c >= grid.cells() || role[c] == -1) {
      throw Error(ErrorCode::DimensionMismatch, "pinned cell " + std::to_string(c) + " lies outside the window");
    }
    role[c] = -2;
  }
  std::vector<int> free;
  for (int c : window_cells(grid, window)) {
    if (role[c] == 0) {
      role[c] = static_cast<int>(free.size());
      free.push_back(c);
    }
  }
  const std::vector<int> rows = residual_rows(grid, window);

  FieldStep out;
  out.field.hz = CVec::Zero(grid.cells());
  for (std::size_t k = 0; k < obj.pinned_indices.size(); ++k) {
    out.field.hz[obj.pinned_indices[k]] = obj.pinned_values[static_cast<Eigen::Index>(k)];
  }

  const SparseOperator a_rows = select_rows(assemble_A(s, ops), rows);
  const CVec b_full = assemble_b(s, src, ops);
  CVec rhs(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = b_full[rows[k]];
  rhs -= a_rows * out.field.hz;
  out.rhs_norm = rhs.norm();

  if (!free.empty()) {
    const SparseOperator af = select_columns(a_rows, free);
    CVec z;
    if (af.rows() == af.cols()) {
      // Square: the least-squares minimizer is the solution of the system.
      try {
        FactorizedOperator lu(af);
        z = lu.solve(rhs, opt.refinement_steps, 1e-14);
      } catch (const Error&) {
        throw Error(ErrorCode::SingularReducedSystem, "reduced field system is singular");
      }
    } else {
      const SparseOperator afh = af.adjoint();
      const SparseOperator normal = afh * af;
      Eigen::SimplicialLDLT<SparseOperator> ldlt(normal);
      if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().real().minCoeff() > 0.0)) {
        throw Error(ErrorCode::SingularReducedSystem,
                    "reduced field normal equations are singular; the pinning leaves free cells unconstrained");
      }
      z = ldlt.solve(afh * rhs);
      for (int k = 0; k < opt.refinement_steps; ++k) {
        const CVec g = afh * (rhs - af * z);
        if (g.norm() <= 1e-15 * (out.rhs_norm + 1.0)) break;
        z += ldlt.solve(g);
      }
    }
    if (!z.allFinite()) throw Error(ErrorCode::SingularReducedSystem, "reduced field solve produced non-finite values");
    for (std::size_t k = 0; k < free.size(); ++k) out.field.hz[free[k]] = z[static_cast<Eigen::Index>(k)];
    out.gradient_norm = (af.adjoint() * (af * z - rhs)).norm();
    out.residual = (af * z - rhs).norm();
  } else {
    out.residual = rhs.norm();
  }
  return out;
}

inline FieldStep field_subproblem(const Structure& s, const DesignObjective& obj, const YeeOperators& ops) {
  return field_subproblem(s, obj, ops, SourceSpec::zero(ops.grid));
}

struct StructureOptions {
  double relative_tolerance = 1e-6;  // projected-gradient bound relative to ||d||
  int max_iterations = 2000;
};

struct StructureStep {
  Structure structure;
  double residual = 0.0;  // sqrt(sum_i ||B(x_i) p - d_i||^2) after the step
  double residual_before = 0.0;
  double projected_gradient = 0.0;
  double d_norm = 0.0;      // sqrt(sum_i ||d_i||^2)
  double d_norm_sum = 0.0;  // sum_i ||d_i||
  int iterations = 0;
  bool converged = true;  // false: iteration cap hit, best iterate returned
};

namespace detail {

/// sqrt(sum_k ||B_k p - d_k||^2), evaluated directly rather than through the
/// normal form so small residuals keep their relative accuracy.
inline double stacked_residual(const std::vector<SparseOperator>& blocks, const std::vector<CVec>& rhs,
                               const RVec& p) {
  const CVec pc = p.cast<cplx>();
  double sq = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) sq += (blocks[k] * pc - rhs[k]).squaredNorm();
  return std::sqrt(sq);
}

}  // namespace detail

/// One field and the objective window it is measured on.
struct FieldTerm {
  const FieldState* field;
  const YeeOperators* ops;
  Rect window;
  const SourceSpec* source = nullptr;
};

/// Structure sub-problem over the vary cells for one or more fields:
/// minimizes sum_i ||B(x_i) p - d(x_i)||^2 on each window's residual rows,
/// with frozen cells moved to the right-hand side, subject to p_lo <= p <= p_hi.
inline StructureStep structure_subproblem(const std::vector<FieldTerm>& terms, const Structure& s,
                                          const StructureOptions& opt = {}) {
  if (terms.empty()) throw Error(ErrorCode::DimensionMismatch, "structure sub-problem needs a field");
  const std::vector<int> vary = s.vary_indices();
  std::vector<int> frozen;
  for (int c = 0; c < s.size(); ++c) {
    if (!s.vary[c]) frozen.push_back(c);
  }

  std::vector<SparseOperator> blocks;
  std::vector<CVec> rhs;
  double d_sq = 0.0;
  double d_norm_sum = 0.0;
  for (const FieldTerm& term : terms) {
    const YeeOperators& ops = *term.ops;
    detail::check_structure(s, ops.grid);
    if (!term.field->hz.allFinite()) throw Error(ErrorCode::DimensionMismatch, "field must be finite");
    const SourceSpec src = term.source ? *term.source : SourceSpec::zero(ops.grid);
    const std::vector<int> rows = residual_rows(ops.grid, term.window);
    const SparseOperator b_rows = select_rows(assemble_B_full(*term.field, src, ops), rows);
    const CVec d_full = assemble_d(*term.field, ops.grid.omega());
    CVec d(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) d[static_cast<Eigen::Index>(k)] = d_full[rows[k]];
    d_sq += d.squaredNorm();
    d_norm_sum += d.norm();
    RVec p_frozen(static_cast<Eigen::Index>(frozen.size()));
    for (std::size_t k = 0; k < frozen.size(); ++k) p_frozen[static_cast<Eigen::Index>(k)] = s.p[frozen[k]];
    rhs.push_back(d - select_columns(b_rows, frozen) * p_frozen.cast<cplx>());
    blocks.push_back(select_columns(b_rows, vary));
  }

  StructureStep out;
  out.structure = s;
  out.d_norm = std::sqrt(d_sq);
  out.d_norm_sum = d_norm_sum;
  const BoxQp qp = make_box_qp(blocks, rhs);
  RVec p0(static_cast<Eigen::Index>(vary.size()));
  for (std::size_t k = 0; k < vary.size(); ++k) p0[static_cast<Eigen::Index>(k)] = s.p[vary[k]];
  out.residual_before = detail::stacked_residual(blocks, rhs, p0);
  if (vary.empty()) {
    out.residual = out.residual_before;
    return out;
  }
  const RVec lo = RVec::Constant(p0.size(), s.p_lo);
  const RVec hi = RVec::Constant(p0.size(), s.p_hi);
  BoxQpOptions qopt;
  qopt.tolerance = opt.relative_tolerance * out.d_norm;
  qopt.max_iterations = opt.max_iterations;
  const BoxQpResult res = solve_box_qp(qp, lo, hi, p0, qopt);
  out.projected_gradient = res.projected_gradient;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.residual = detail::stacked_residual(blocks, rhs, res.p);
  if (!(out.residual <= out.residual_before)) {
    // Rounding in the normal form can leave a step that does not help; keep p.
    out.residual = out.residual_before;
    return out;
  }
  for (std::size_t k = 0; k < vary.size(); ++k) out.structure.p[vary[k]] = res.p[static_cast<Eigen::Index>(k)];
  return out;
}

/// Single-field convenience overload.
inline StructureStep structure_subproblem(const FieldState& x, const Structure& s, const YeeOperators& ops,
                                          const Rect& window = {}, const StructureOptions& opt = {}) {
  return structure_subproblem({FieldTerm{&x, &ops, window}}, s, opt);
}

struct TraceRecord {
  int iteration = 0;
  double residual_after_field_step = 0.0;
  double residual_after_structure_step = 0.0;
  double wall_time = 0.0;  // seconds since the run started
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  /// Half-step residual sequence f_0, s_0, f_1, s_1, ...
  std::vector<double> half_steps() const {
    std::vector<double> seq;
    for (const TraceRecord& r : records) {
      seq.push_back(r.residual_after_field_step);
      seq.push_back(r.residual_after_structure_step);
    }
    return seq;
  }

  /// True when no half-step exceeds its predecessor by more than (1 + slack).
  bool monotone(double slack = 1e-8) const {
    const std::vector<double> seq = half_steps();
    for (std::size_t k = 1; k < seq.size(); ++k) {
      if (seq[k] > seq[k - 1] * (1.0 + slack)) return false;
    }
    return true;
  }
};

/// One objective of a (possibly multi-mode, multi-frequency) design.
struct ModeObjective {
  DesignObjective objective;
  std::shared_ptr<const YeeOperators> ops;
};

struct DesignProblem {
  Structure structure;
  std::vector<ModeObjective> objectives;
  int max_iterations = 400;
  StructureOptions structure_options{};
  FieldOptions field_options{};
  int threads = 1;  // cap on concurrent field solves
};

struct DesignResult {
  Structure structure;
  std::vector<FieldState> fields;
  ConvergenceTrace trace;
  bool structure_converged = true;  // every structure step met its tolerance
};

using IterationCallback = std::function<void(const TraceRecord&)>;

inline void validate(const DesignProblem& prob) {
  if (prob.objectives.empty()) throw Error(ErrorCode::DimensionMismatch, "design problem needs an objective");
  if (prob.max_iterations < 0) throw Error(ErrorCode::DimensionMismatch, "max_iterations must be >= 0");
  if (!prob.structure.feasible()) throw Error(ErrorCode::DimensionMismatch, "initial structure violates its bounds");
  for (const ModeObjective& m : prob.objectives) {
    if (!m.ops) throw Error(ErrorCode::DimensionMismatch, "objective without grid operators");
    detail::check_structure(prob.structure, m.ops->grid);
  }
}

/// Alternating directions: n field sub-problems (run concurrently up to
/// `threads`), then one structure sub-problem over all fields, repeated.
inline DesignResult alternating_directions(const DesignProblem& prob, const IterationCallback& on_iteration = {}) {
  validate(prob);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = prob.objectives.size();
  DesignResult out;
  out.structure = prob.structure;
  out.fields.assign(n, FieldState{});

  double d_total = 0.0;
  for (int it = 0; it < prob.max_iterations; ++it) {
    std::vector<FieldStep> steps(n);
    auto solve_one = [&](std::size_t k) {
      const ModeObjective& m = prob.objectives[k];
      return field_subproblem(out.structure, m.objective, *m.ops, SourceSpec::zero(m.ops->grid), prob.field_options);
    };
    try {
      const std::size_t width = static_cast<std::size_t>(std::max(1, prob.threads));
      for (std::size_t base = 0; base < n; base += width) {
        std::vector<std::future<FieldStep>> jobs;
        const std::size_t end = std::min(n, base + width);
        for (std::size_t k = base + 1; k < end; ++k) jobs.push_back(std::async(std::launch::async, solve_one, k));
        steps[base] = solve_one(base);
        for (std::size_t k = base + 1; k < end; ++k) steps[k] = jobs[k - base - 1].get();
      }
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(it) + ", field step: " + e.what());
    }

    double field_sq = 0.0;
    std::vector<FieldTerm> terms;
    for (std::size_t k = 0; k < n; ++k) {
      out.fields[k] = std::move(steps[k].field);
      field_sq += steps[k].residual * steps[k].residual;
    }
    for (std::size_t k = 0; k < n; ++k) {
      terms.push_back({&out.fields[k], prob.objectives[k].ops.get(), prob.objectives[k].objective.window});
    }

    StructureStep st;
    try {
      st = structure_subproblem(terms, out.structure, prob.structure_options);
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(it) + ", structure step: " + e.what());
    }
    out.structure = std::move(st.structure);
    out.structure_converged = out.structure_converged && st.converged;
    d_total = st.d_norm_sum;

    TraceRecord rec;
    rec.iteration = it;
    rec.residual_after_field_step = std::sqrt(field_sq);
    rec.residual_after_structure_step = st.residual;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.trace.records.push_back(rec);
    if (on_iteration) on_iteration(rec);
    if (rec.residual_after_structure_step < 1e-10 * d_total) break;
  }
  return out;
}

}  // namespace wavefirst

#pragma once

// Bilinear pieces of the discrete wave equation
//
//   A(p) x - b(p) = B(x) p - d(x)
//
// with A(p) = Ce diag(M p) Ch - w^2 I, b(p) = Ce diag(M p) J,
//      B(x) = Ce diag(Ch x - J) M,    d(x) = w^2 x   (mu_0 = 1).

#include <string>
#include <vector>

#include "wavefirst/error.hpp"
#include "wavefirst/grid.hpp"
#include "wavefirst/types.hpp"

namespace wavefirst {

/// Inverse permittivity per cell plus the box bounds and the mask of cells the
/// optimizer may change. Frozen cells can hold any nonzero value, including
/// negative ones for metals.
struct Structure {
  RVec p;
  double p_lo = 1.0 / 12.25;
  double p_hi = 1.0;
  std::vector<bool> vary;

  static Structure uniform(const GridSpec& grid, double p_value) {
    Structure s;
    s.p = RVec::Constant(grid.cells(), p_value);
    s.vary.assign(grid.cells(), false);
    return s;
  }

  int size() const { return static_cast<int>(p.size()); }

  int vary_count() const {
    int n = 0;
    for (bool v : vary) n += v;
    return n;
  }

  std::vector<int> vary_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(vary.size()); ++i) {
      if (vary[i]) idx.push_back(i);
    }
    return idx;
  }

  bool feasible() const {
    for (int i = 0; i < size(); ++i) {
      if (vary[i] && (p[i] < p_lo || p[i] > p_hi)) return false;
    }
    return true;
  }
};

struct FieldState {
  CVec hz;
};

/// Electric current on E edges (length 2 * nx * ny).
struct SourceSpec {
  CVec j;

  static SourceSpec zero(const GridSpec& grid) { return {CVec::Zero(grid.edges())}; }
};

namespace detail {

inline void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has length " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(want));
  }
}

inline void check_structure(const Structure& s, const GridSpec& grid) {
  require_size(s.p.size(), grid.cells(), "structure p");
  require_size(static_cast<Eigen::Index>(s.vary.size()), grid.cells(), "structure vary mask");
}

}  // namespace detail

/// p averaged onto E edges.
inline CVec edge_values(const Structure& s, const YeeOperators& ops) {
  detail::check_structure(s, ops.grid);
  return ops.edge_map * s.p.cast<cplx>();
}

inline SparseOperator assemble_A(const Structure& s, const YeeOperators& ops) {
  const CVec pe = edge_values(s, ops);
  SparseOperator scaled_ch = pe.asDiagonal() * ops.ch;
  SparseOperator a = ops.ce * scaled_ch;
  const double w2 = ops.grid.omega() * ops.grid.omega();
  a -= w2 * identity_operator(ops.grid.cells());
  a.makeCompressed();
  return a;
}

inline CVec assemble_b(const Structure& s, const SourceSpec& src, const YeeOperators& ops) {
  detail::require_size(src.j.size(), ops.grid.edges(), "source J");
  const CVec pe = edge_values(s, ops);
  return ops.ce * pe.cwiseProduct(src.j).eval();
}

/// B(x) over every cell (no vary-mask restriction).
inline SparseOperator assemble_B_full(const FieldState& x, const SourceSpec& src,
                                      const YeeOperators& ops) {
  detail::require_size(x.hz.size(), ops.grid.cells(), "field x");
  detail::require_size(src.j.size(), ops.grid.edges(), "source J");
  const CVec curl_h = ops.ch * x.hz - src.j;
  SparseOperator scaled_m = curl_h.asDiagonal() * ops.edge_map;
  SparseOperator b = ops.ce * scaled_m;
  b.makeCompressed();
  return b;
}

/// Keeps the columns listed in `cols`, in that order.
inline SparseOperator select_columns(const SparseOperator& op, const std::vector<int>& cols) {
  std::vector<Triplet> t;
  for (int k = 0; k < static_cast<int>(cols.size()); ++k) {
    for (SparseOperator::InnerIterator it(op, cols[k]); it; ++it) {
      t.emplace_back(static_cast<int>(it.row()), k, it.value());
    }
  }
  return make_operator(op.rows(), static_cast<Eigen::Index>(cols.size()), t);
}

/// Keeps the rows listed in `rows`, in that order.
inline SparseOperator select_rows(const SparseOperator& op, const std::vector<int>& rows) {
  std::vector<int> position(op.rows(), -1);
  for (int k = 0; k < static_cast<int>(rows.size()); ++k) position[rows[k]] = k;
  std::vector<Triplet> t;
  for (int c = 0; c < op.outerSize(); ++c) {
    for (SparseOperator::InnerIterator it(op, c); it; ++it) {
      if (int r = position[it.row()]; r >= 0) t.emplace_back(r, c, it.value());
    }
  }
  return make_operator(static_cast<Eigen::Index>(rows.size()), op.cols(), t);
}

/// B(x) restricted to the structure's vary cells (column order = vary_indices()).
inline SparseOperator assemble_B(const FieldState& x, const SourceSpec& src, const Structure& s,
                                 const YeeOperators& ops) {
  detail::check_structure(s, ops.grid);
  return select_columns(assemble_B_full(x, src, ops), s.vary_indices());
}

inline CVec assemble_d(const FieldState& x, double omega) { return (omega * omega) * x.hz; }

inline CVec residual_vector(const Structure& s, const FieldState& x, const SourceSpec& src,
                            const YeeOperators& ops) {
  detail::require_size(x.hz.size(), ops.grid.cells(), "field x");
  return assemble_A(s, ops) * x.hz - assemble_b(s, src, ops);
}

/// ||A(p) x - b(p)||_2.
inline double physics_residual(const Structure& s, const FieldState& x, const SourceSpec& src,
                               const YeeOperators& ops) {
  return residual_vector(s, x, src, ops).norm();
}

/// E on the edges from H: E = eps^-1 (curl H - J) / (i w).
inline CVec electric_field(const Structure& s, const FieldState& x, const SourceSpec& src,
                           const YeeOperators& ops) {
  const CVec pe = edge_values(s, ops);
  const CVec curl_h = ops.ch * x.hz - src.j;
  return pe.cwiseProduct(curl_h) / cplx(0.0, ops.grid.omega());
}

}  // namespace wavefirst

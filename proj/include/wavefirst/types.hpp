#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace wavefirst {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Complex sparse operator used for curls, edge averaging, A(p) and B(x).
// Triplet construction sums duplicate (row, col) entries.
using SparseOperator = Eigen::SparseMatrix<cplx>;
using RealSparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<cplx>;

inline SparseOperator make_operator(Eigen::Index rows, Eigen::Index cols,
                                    const std::vector<Triplet>& entries) {
  SparseOperator op(rows, cols);
  op.setFromTriplets(entries.begin(), entries.end());
  op.makeCompressed();
  return op;
}

inline SparseOperator identity_operator(Eigen::Index n) {
  SparseOperator id(n, n);
  id.setIdentity();
  return id;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace wavefirst

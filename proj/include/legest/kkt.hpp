#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "legest/qp_solver.hpp"

namespace legest {

// First-order optimality system of an equality-constrained QP:
//
//   K = [ H  G' ]      rhs = [ -h ]
//       [ G  0  ]            [  g ]
//
// KKT indices 0..n-1 address primal variables, n..n+m-1 constraint rows.
struct KktSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd rhs;
  int n = 0;  // primal variables
  int m = 0;  // constraint rows
};

KktSystem build_kkt(const QpProblem& qp);

// Symmetrically permutes the KKT system so that the indices in `group0`
// (variables of the block being eliminated plus its constraint rows) come
// first, followed by the indices in `group1` (the variables the eliminated
// block couples into), followed by everything else in ascending order.
//
// Validates that group0 is *closed*: outside of group0 itself, rows/columns
// of group0 may only touch group1 columns.  Throws Group0NotClosed
// otherwise, DimensionMismatch for out-of-range or duplicate indices.
KktSystem reorder_kkt(const KktSystem& sys, const std::vector<int>& group0,
                      const std::vector<int>& group1);

}  // namespace legest

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace legest {

// Equality-constrained quadratic program
//
//   min_x  0.5 x' H x + h' x    s.t.  G x = g
//
// with H symmetric positive semidefinite (positive definite on the null
// space of G for a unique minimizer) and G of full row rank.
struct QpProblem {
  Eigen::SparseMatrix<double> H;  // n x n
  Eigen::VectorXd h;              // n
  Eigen::SparseMatrix<double> G;  // m x n (m may be 0)
  Eigen::VectorXd g;              // m
};

struct QpSolution {
  Eigen::VectorXd x;       // primal minimizer
  Eigen::VectorXd lambda;  // constraint multipliers
  double kkt_residual;     // || K [x;lambda] - rhs ||_inf after refinement
};

// Solves the first-order optimality (KKT) system
//
//   [ H  G' ] [   x    ]   [ -h ]
//   [ G  0  ] [ lambda ] = [  g ]
//
// by a direct symmetric factorization: dense Bunch-Kaufman LDL^T for small
// systems (where the factor's inertia certifies well-posedness), sparse LU
// otherwise.  Throws Error with code
//   * RankDeficientConstraints  when rows of G are linearly dependent,
//   * IndefiniteReducedHessian  when H is not positive definite on null(G),
//   * SingularKkt               when the system cannot be solved to the
//                               documented residual bound,
//   * NonSymmetricHessian / DimensionMismatch on malformed input.
QpSolution solve_eq_qp(const QpProblem& qp);

}  // namespace legest

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace legest {

// Dense symmetric *indefinite* LDL^T factorization with Bunch-Kaufman
// partial pivoting:  Q A Q^T = L D L^T  with unit lower-triangular L, D
// block diagonal (1x1 / 2x2 blocks) and Q a permutation.
//
// Eigen's LDLT is limited to (semi-)definite matrices; saddle-point systems
// (KKT matrices) need 2x2 pivots to factor stably, and their inertia is the
// cheapest reliable well-posedness certificate, so we carry our own
// implementation.
//
// The matrix is Ruiz-equilibrated (symmetrically rescaled to unit row
// maxima) before factoring, so badly scaled but regular systems -- KKT
// matrices mixing weights across many orders of magnitude -- factor cleanly;
// the congruence preserves inertia and solve() undoes the scaling.
//
// Singularity is reported, not thrown: a pivot (block) whose magnitude falls
// below pivot_tol_rel * ||A||_inf of the equilibrated matrix stops the
// factorization and marks the matrix singular.
class SymmetricIndefiniteLdlt {
 public:
  // Factor A (only its lower triangle is referenced).
  void compute(const Eigen::MatrixXd& A, double pivot_tol_rel = 1e-12);

  bool singular() const { return singular_; }

  // Solve A x = rhs.  Only valid when !singular().
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  // Signature (n_plus, n_minus) of A.  Only valid when !singular(); zero
  // pivots are never accepted, so n_plus + n_minus == n.
  void inertia(int* n_plus, int* n_minus) const;

 private:
  struct Pivot {
    int block;  // 1 or 2
    int col;    // leading column of the pivot block
    int swap_a, swap_b;  // rows swapped before elimination (-1: none)
  };

  Eigen::MatrixXd f_;          // packed L (strict lower) and D (diagonal blocks)
  Eigen::VectorXd scale_;      // equilibration diagonal applied as D A D
  std::vector<Pivot> pivots_;
  int n_ = 0;
  bool singular_ = false;
};

}  // namespace legest

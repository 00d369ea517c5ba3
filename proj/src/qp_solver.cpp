#include "legest/qp_solver.hpp"

#include <Eigen/SparseLU>
#include <string>

#include "legest/dense_ldlt.hpp"
#include "legest/errors.hpp"

namespace legest {

namespace {

// Problems up to this KKT dimension go through the dense factorization,
// whose inertia distinguishes a saddle-point minimizer from an indefinite
// or rank-deficient problem.
constexpr int kDenseKktLimit = 192;

constexpr double kResidualTolFactor = 1e-9;

// Iterative refinement aims well below the acceptance threshold: each pass
// costs one cheap back-substitution and buys several digits on badly
// conditioned KKT systems.
constexpr double kRefineTolFactor = 1e-14;
constexpr int kRefinePasses = 5;

void validate(const QpProblem& qp) {
  const int n = static_cast<int>(qp.H.rows());
  const int m = static_cast<int>(qp.G.rows());
  if (qp.H.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "H must be square");
  }
  if (qp.h.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "h size does not match H");
  }
  if (m > 0 && qp.G.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "G column count does not match H");
  }
  if (qp.g.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "g size does not match G");
  }
  // Symmetry check on the sparse Hessian.
  Eigen::SparseMatrix<double> Ht = qp.H.transpose();
  double asym = 0.0;
  double scale = 1.0;
  for (int c = 0; c < qp.H.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.H, c); it; ++it) {
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  Eigen::SparseMatrix<double> diff = qp.H - Ht;
  for (int c = 0; c < diff.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it) {
      asym = std::max(asym, std::abs(it.value()));
    }
  }
  if (asym > 1e-12 * scale) {
    throw Error(ErrorCode::NonSymmetricHessian,
                "asymmetry " + std::to_string(asym));
  }
}

Eigen::SparseMatrix<double> build_kkt_matrix(const QpProblem& qp) {
  const int n = static_cast<int>(qp.H.rows());
  const int m = static_cast<int>(qp.G.rows());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(qp.H.nonZeros() + 2 * qp.G.nonZeros());
  for (int c = 0; c < qp.H.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.H, c); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), c, it.value());
    }
  }
  for (int c = 0; c < qp.G.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.G, c); it; ++it) {
      const int r = static_cast<int>(it.row());
      trips.emplace_back(n + r, c, it.value());  // G
      trips.emplace_back(c, n + r, it.value());  // G'
    }
  }
  Eigen::SparseMatrix<double> K(n + m, n + m);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

// Symmetric Ruiz equilibration: returns d such that diag(d) K diag(d) has
// rows/columns of unit max-magnitude (a few sweeps suffice).  The KKT blocks
// mix noise weights spanning many orders of magnitude, and an unbalanced
// factorization can lose the small pivots entirely.
Eigen::VectorXd ruiz_scaling(const Eigen::SparseMatrix<double>& K) {
  const int n = static_cast<int>(K.rows());
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd row_max = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < K.outerSize(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
        const double v = std::abs(d[it.row()] * it.value() * d[c]);
        row_max[it.row()] = std::max(row_max[it.row()], v);
      }
    }
    bool balanced = true;
    for (int i = 0; i < n; ++i) {
      if (row_max[i] == 0.0) continue;
      if (row_max[i] > 2.0 || row_max[i] < 0.5) balanced = false;
      d[i] /= std::sqrt(row_max[i]);
    }
    if (balanced) break;
  }
  return d;
}

// On factorization failure, decide whether the constraints or the reduced
// Hessian are to blame.
[[noreturn]] void diagnose_failure(const QpProblem& qp) {
  const int m = static_cast<int>(qp.G.rows());
  if (m > 0) {
    Eigen::MatrixXd Gd(qp.G);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Gd.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < m) {
      throw Error(ErrorCode::RankDeficientConstraints,
                  "rank " + std::to_string(qr.rank()) + " < " +
                      std::to_string(m) + " rows");
    }
  }
  throw Error(ErrorCode::IndefiniteReducedHessian,
              "Hessian is singular or indefinite on the constraint null space");
}

}  // namespace

QpSolution solve_eq_qp(const QpProblem& qp) {
  validate(qp);
  const int n = static_cast<int>(qp.H.rows());
  const int m = static_cast<int>(qp.G.rows());
  const int nm = n + m;

  Eigen::SparseMatrix<double> K = build_kkt_matrix(qp);
  Eigen::VectorXd rhs(nm);
  rhs.head(n) = -qp.h;
  rhs.tail(m) = qp.g;

  Eigen::VectorXd z(nm);
  const double rhs_scale = 1.0 + (nm > 0 ? rhs.cwiseAbs().maxCoeff() : 0.0);
  const double tol = kResidualTolFactor * rhs_scale;

  if (nm <= kDenseKktLimit) {
    SymmetricIndefiniteLdlt ldlt;
    ldlt.compute(Eigen::MatrixXd(K));
    if (ldlt.singular()) diagnose_failure(qp);
    int n_plus = 0, n_minus = 0;
    ldlt.inertia(&n_plus, &n_minus);
    // A strict local minimizer requires inertia (n, m): n positive
    // directions from the reduced Hessian, one negative per constraint.
    if (n_plus != n || n_minus != m) {
      if (n_plus < n) {
        throw Error(ErrorCode::IndefiniteReducedHessian,
                    "KKT inertia (" + std::to_string(n_plus) + "," +
                        std::to_string(n_minus) + ") expected (" +
                        std::to_string(n) + "," + std::to_string(m) + ")");
      }
      diagnose_failure(qp);
    }
    z = ldlt.solve(rhs);
    for (int pass = 0; pass < kRefinePasses; ++pass) {
      Eigen::VectorXd r = K * z - rhs;
      if (r.cwiseAbs().maxCoeff() <= kRefineTolFactor * rhs_scale) break;
      z -= ldlt.solve(r);
    }
  } else {
    // Factor the equilibrated matrix; refine in the original variables.
    const Eigen::VectorXd d = ruiz_scaling(K);
    Eigen::SparseMatrix<double> Ks = K;
    for (int c = 0; c < Ks.outerSize(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(Ks, c); it; ++it) {
        it.valueRef() *= d[it.row()] * d[c];
      }
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(Ks);
    lu.factorize(Ks);
    if (lu.info() != Eigen::Success) diagnose_failure(qp);
    const auto scaled_solve = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
      const Eigen::VectorXd bs = d.cwiseProduct(b);
      const Eigen::VectorXd ys = lu.solve(bs);
      return d.cwiseProduct(ys);
    };
    z = scaled_solve(rhs);
    for (int pass = 0; pass < kRefinePasses; ++pass) {
      Eigen::VectorXd r = K * z - rhs;
      if (r.cwiseAbs().maxCoeff() <= kRefineTolFactor * rhs_scale) break;
      z -= scaled_solve(r);
    }
  }

  const double residual =
      nm > 0 ? (K * z - rhs).cwiseAbs().maxCoeff() : 0.0;
  // The negated comparison also rejects a NaN residual (from a factorization
  // that went numerically degenerate without reporting failure).
  if (!(residual <= tol)) {
    throw Error(ErrorCode::SingularKkt,
                "KKT residual " + std::to_string(residual) +
                    " exceeds tolerance " + std::to_string(tol));
  }

  QpSolution sol;
  sol.x = z.head(n);
  sol.lambda = z.tail(m);
  sol.kkt_residual = residual;
  return sol;
}

}  // namespace legest

// Test-only reference solver for equality-constrained QPs using the
// null-space method -- an algorithmically independent path from the
// production KKT factorization (no KKT matrix is ever formed).
#pragma once

#include <Eigen/Dense>

namespace legest_test {

struct NullspaceSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  double objective;
};

// min 0.5 x'Hx + h'x  s.t.  Gx = g, via QR of G':
//   G' = Q R,  Q = [Y Z] with Z an orthonormal null-space basis of G.
//   x = Y xy + Z xz;  R1' xy = g  fixes the range component;
//   (Z'HZ) xz = -Z'(h + H Y xy)  fixes the null component (LLT: must be PD);
//   R1 lambda = -Y'(Hx + h)      recovers the multipliers.
inline NullspaceSolution solve_eq_qp_nullspace(const Eigen::MatrixXd& H,
                                               const Eigen::VectorXd& h,
                                               const Eigen::MatrixXd& G,
                                               const Eigen::VectorXd& g) {
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(G.rows());
  NullspaceSolution out;

  if (m == 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    out.x = llt.solve(-h);
    out.lambda = Eigen::VectorXd::Zero(0);
  } else {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G.transpose());
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R1 = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Eigen::MatrixXd Y = Q.leftCols(m);
    Eigen::MatrixXd Z = Q.rightCols(n - m);

    Eigen::VectorXd xy =
        R1.transpose().triangularView<Eigen::Lower>().solve(g);
    Eigen::VectorXd x_range = Y * xy;

    Eigen::VectorXd xz;
    if (n > m) {
      Eigen::MatrixXd Hz = Z.transpose() * H * Z;
      Eigen::LLT<Eigen::MatrixXd> llt(Hz);
      xz = llt.solve(-Z.transpose() * (h + H * x_range));
      out.x = x_range + Z * xz;
    } else {
      out.x = x_range;
    }
    out.lambda = R1.triangularView<Eigen::Upper>().solve(
        -Y.transpose() * (H * out.x + h));
  }
  out.objective = 0.5 * out.x.dot(H * out.x) + h.dot(out.x);
  return out;
}

}  // namespace legest_test

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "legest/dense_ldlt.hpp"
#include "legest/errors.hpp"
#include "legest/qp_solver.hpp"
#include "qp_reference.hpp"

using namespace legest;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Eigen::SparseMatrix<double> to_sparse(const MatrixXd& A) {
  return A.sparseView();
}

// Random QP with H positive definite on the null space of a full-row-rank G.
struct RandomQp {
  QpProblem qp;
  MatrixXd Hd, Gd;
};

RandomQp random_qp(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = nd(rng);
  // PSD with a small ridge: PD everywhere, hence PD on any null space.
  MatrixXd H = B.transpose() * B + 1e-3 * MatrixXd::Identity(n, n);
  MatrixXd G(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = nd(rng);
  VectorXd h(n), g(m);
  for (int i = 0; i < n; ++i) h[i] = nd(rng);
  for (int i = 0; i < m; ++i) g[i] = nd(rng);

  RandomQp out;
  out.Hd = H;
  out.Gd = G;
  out.qp.H = to_sparse(H);
  out.qp.h = h;
  out.qp.G = to_sparse(G);
  out.qp.g = g;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense symmetric-indefinite factorization
// ---------------------------------------------------------------------------

TEST_CASE("ldlt: solves random symmetric indefinite systems") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);
    VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = nd(rng);

    SymmetricIndefiniteLdlt ldlt;
    ldlt.compute(A);
    if (ldlt.singular()) continue;  // exceedingly unlikely for random A
    VectorXd x = ldlt.solve(b);
    CHECK((A * x - b).cwiseAbs().maxCoeff() <
          1e-9 * (1.0 + b.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("ldlt: inertia matches eigenvalue signs") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 20);
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);

    SymmetricIndefiniteLdlt ldlt;
    ldlt.compute(A);
    REQUIRE(!ldlt.singular());
    int np = 0, nm = 0;
    ldlt.inertia(&np, &nm);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
    int ep = 0, em = 0;
    for (int i = 0; i < n; ++i) (es.eigenvalues()[i] > 0 ? ep : em) += 1;
    CHECK(np == ep);
    CHECK(nm == em);
  }
}

TEST_CASE("ldlt: detects singular matrices") {
  // Rank-1 outer product.
  VectorXd v(4);
  v << 1, -2, 0.5, 3;
  MatrixXd A = v * v.transpose();
  SymmetricIndefiniteLdlt ldlt;
  ldlt.compute(A);
  CHECK(ldlt.singular());

  // Zero matrix.
  ldlt.compute(MatrixXd::Zero(3, 3));
  CHECK(ldlt.singular());

  // Saddle system with dependent constraint rows:
  // K = [I G'; G 0] with duplicated row of G.
  MatrixXd G(2, 3);
  G << 1, 2, 3, 1, 2, 3;
  MatrixXd K = MatrixXd::Zero(5, 5);
  K.topLeftCorner(3, 3).setIdentity();
  K.block(3, 0, 2, 3) = G;
  K.block(0, 3, 3, 2) = G.transpose();
  ldlt.compute(K);
  CHECK(ldlt.singular());
}

TEST_CASE("ldlt: multiple right-hand sides") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd A(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);
  MatrixXd B(8, 5);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 5; ++j) B(i, j) = nd(rng);
  SymmetricIndefiniteLdlt ldlt;
  ldlt.compute(A);
  REQUIRE(!ldlt.singular());
  MatrixXd X = ldlt.solve(B);
  CHECK((A * X - B).cwiseAbs().maxCoeff() < 1e-10);
}

// ---------------------------------------------------------------------------
// Equality-constrained QP solver
// ---------------------------------------------------------------------------

TEST_CASE("qp: pinned coordinate") {
  // min 0.5 |x|^2 s.t. x_0 = 1  ->  x = (1, 0), lambda = -1.
  QpProblem qp;
  qp.H = to_sparse(MatrixXd::Identity(2, 2));
  qp.h = VectorXd::Zero(2);
  MatrixXd G(1, 2);
  G << 1, 0;
  qp.G = to_sparse(G);
  qp.g = VectorXd::Ones(1);
  QpSolution s = solve_eq_qp(qp);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(0.0));
  // Stationarity: H x + h + G' lambda = 0 -> lambda = -1.
  CHECK(s.lambda[0] == doctest::Approx(-1.0));
}

TEST_CASE("qp: unconstrained scalar") {
  // min 0.5 (x-2)^2 = 0.5 x^2 - 2x + const.
  QpProblem qp;
  qp.H = to_sparse(MatrixXd::Identity(1, 1));
  qp.h = VectorXd::Constant(1, -2.0);
  qp.G.resize(0, 1);
  qp.g.resize(0);
  QpSolution s = solve_eq_qp(qp);
  CHECK(s.x[0] == doctest::Approx(2.0));
}

TEST_CASE("qp: matches null-space reference on random problems") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);           // 2..50
    const int m = static_cast<int>(rng() % (std::min(n, 31)));  // 0..min(n,30)
    RandomQp r = random_qp(rng, n, m);
    QpSolution s = solve_eq_qp(r.qp);
    auto ref = legest_test::solve_eq_qp_nullspace(r.Hd, r.qp.h, r.Gd, r.qp.g);

    const double xs = 1.0 + ref.x.cwiseAbs().maxCoeff();
    CHECK((s.x - ref.x).cwiseAbs().maxCoeff() < 1e-8 * xs);
    if (m > 0) {
      const double ls = 1.0 + ref.lambda.cwiseAbs().maxCoeff();
      CHECK((s.lambda - ref.lambda).cwiseAbs().maxCoeff() < 1e-8 * ls);
    }

    // Contract: feasibility, stationarity, residual bound.
    if (m > 0) {
      CHECK((r.Gd * s.x - r.qp.g).cwiseAbs().maxCoeff() <
            1e-9 * (1.0 + r.qp.g.cwiseAbs().maxCoeff()));
    }
    VectorXd grad = r.Hd * s.x + r.qp.h;
    if (m > 0) grad += r.Gd.transpose() * s.lambda;
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-7 * (1.0 + s.x.cwiseAbs().maxCoeff()));
    CHECK(s.kkt_residual <= 1e-9 * (1.0 + std::max(r.qp.h.cwiseAbs().maxCoeff(),
                                                   m > 0 ? r.qp.g.cwiseAbs().maxCoeff() : 0.0)));
  }
}

TEST_CASE("qp: duplicated constraint rows are rejected") {
  std::mt19937_64 rng(7);
  RandomQp r = random_qp(rng, 10, 4);
  // Duplicate the last row of G.
  MatrixXd G2(5, 10);
  G2.topRows(4) = r.Gd;
  G2.row(4) = r.Gd.row(3);
  VectorXd g2(5);
  g2 << r.qp.g, r.qp.g[3];
  QpProblem qp = r.qp;
  qp.G = to_sparse(G2);
  qp.g = g2;
  CHECK_THROWS_AS(solve_eq_qp(qp), Error);
  try {
    solve_eq_qp(qp);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientConstraints);
  }
}

TEST_CASE("qp: indefinite reduced Hessian is rejected") {
  // H negative definite, no constraints.
  QpProblem qp;
  qp.H = to_sparse(MatrixXd(-MatrixXd::Identity(3, 3)));
  qp.h = VectorXd::Zero(3);
  qp.G.resize(0, 3);
  qp.g.resize(0);
  CHECK_THROWS_AS(solve_eq_qp(qp), Error);
  try {
    solve_eq_qp(qp);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndefiniteReducedHessian);
  }

  // H indefinite with the negative direction inside null(G).
  MatrixXd H = MatrixXd::Zero(2, 2);
  H(0, 0) = 1.0;
  H(1, 1) = -1.0;
  MatrixXd G(1, 2);
  G << 1, 0;  // null space = span(e2), reduced Hessian = -1
  QpProblem qp2;
  qp2.H = to_sparse(H);
  qp2.h = VectorXd::Zero(2);
  qp2.G = to_sparse(G);
  qp2.g = VectorXd::Zero(1);
  CHECK_THROWS_AS(solve_eq_qp(qp2), Error);
}

TEST_CASE("qp: non-symmetric Hessian and dimension mismatches are rejected") {
  MatrixXd H(2, 2);
  H << 1, 0.5, 0.0, 1;
  QpProblem qp;
  qp.H = to_sparse(H);
  qp.h = VectorXd::Zero(2);
  qp.G.resize(0, 2);
  qp.g.resize(0);
  CHECK_THROWS_AS(solve_eq_qp(qp), Error);

  QpProblem qp2;
  qp2.H = to_sparse(MatrixXd::Identity(2, 2));
  qp2.h = VectorXd::Zero(3);  // wrong size
  qp2.G.resize(0, 2);
  qp2.g.resize(0);
  CHECK_THROWS_AS(solve_eq_qp(qp2), Error);
}

TEST_CASE("qp: sparse path agrees with dense path across the size threshold") {
  // Same block-diagonal problem replicated to push past the dense limit;
  // per-block solutions must be identical regardless of the internal path.
  std::mt19937_64 rng(99);
  RandomQp small = random_qp(rng, 20, 8);
  QpSolution s_small = solve_eq_qp(small.qp);

  const int reps = 15;  // 15 * 28 = 420 KKT rows -> sparse path
  const int n = 20, m = 8;
  MatrixXd H = MatrixXd::Zero(n * reps, n * reps);
  MatrixXd G = MatrixXd::Zero(m * reps, n * reps);
  VectorXd h(n * reps), g(m * reps);
  for (int r = 0; r < reps; ++r) {
    H.block(r * n, r * n, n, n) = small.Hd;
    G.block(r * m, r * n, m, n) = small.Gd;
    h.segment(r * n, n) = small.qp.h;
    g.segment(r * m, m) = small.qp.g;
  }
  QpProblem big;
  big.H = to_sparse(H);
  big.h = h;
  big.G = to_sparse(G);
  big.g = g;
  QpSolution s_big = solve_eq_qp(big);
  for (int r = 0; r < reps; ++r) {
    CHECK((s_big.x.segment(r * n, n) - s_small.x).cwiseAbs().maxCoeff() < 1e-9);
  }
}

#include "legest/marginalization.hpp"

#include <string>

#include "legest/dense_ldlt.hpp"
#include "legest/errors.hpp"

namespace legest {

ArrivalCost marginalize(const KktSystem& reordered, int p, int q,
                        const GroupLayout& surviving_layout, double t) {
  const int dim = reordered.n + reordered.m;
  if (p <= 0 || q <= 0 || p + q > dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "invalid marginalization block sizes");
  }
  if (surviving_layout.total() != q) {
    throw Error(ErrorCode::DimensionMismatch,
                "surviving layout does not match q");
  }

  const Eigen::MatrixXd K00 =
      Eigen::MatrixXd(reordered.K.topLeftCorner(p, p));
  const Eigen::MatrixXd K01 = Eigen::MatrixXd(reordered.K.block(0, p, p, q));
  const Eigen::VectorXd k0 = reordered.rhs.head(p);

  SymmetricIndefiniteLdlt ldlt;
  ldlt.compute(K00, 1e-12);
  if (ldlt.singular()) {
    throw Error(ErrorCode::SingularK00,
                "eliminated block of dimension " + std::to_string(p) +
                    " is singular");
  }

  // Solve K00 X = B with a couple of refinement sweeps: the Schur complement
  // feeds every later estimate, so its error budget is the tightest in the
  // whole pipeline.
  const auto refined_solve = [&](const Eigen::MatrixXd& B) {
    Eigen::MatrixXd X = ldlt.solve(B);
    const double b_scale = 1.0 + B.cwiseAbs().maxCoeff();
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::MatrixXd R = K00 * X - B;
      if (R.cwiseAbs().maxCoeff() <= 1e-14 * b_scale) break;
      X -= ldlt.solve(R);
    }
    return X;
  };

  ArrivalCost out;
  out.layout = surviving_layout;
  out.t = t;
  out.M = -K01.transpose() * refined_solve(K01);
  // Re-symmetrize: the Schur complement is symmetric in exact arithmetic.
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  out.m = K01.transpose() * refined_solve(k0);
  return out;
}

ArrivalCost prior_arrival(const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0,
                          double t) {
  const int nx = static_cast<int>(x0.size());
  if (P0.rows() != nx || P0.cols() != nx) {
    throw Error(ErrorCode::DimensionMismatch, "P0 does not match x0");
  }
  if ((P0 - P0.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + P0.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::DimensionMismatch, "P0 must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(P0);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::DimensionMismatch, "P0 must be positive definite");
  }
  ArrivalCost out;
  out.layout = GroupLayout{nx, 0, 0, 0};
  out.t = t;
  out.M = llt.solve(Eigen::MatrixXd::Identity(nx, nx));
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  out.m = -out.M * x0;
  return out;
}

ArrivalCost embed_arrival(const ArrivalCost& arrival, const GroupLayout& target) {
  if (arrival.layout == target) return arrival;

  struct SlotPair {
    int src, dst;
  };
  const SlotPair slots[] = {{arrival.layout.x, target.x},
                            {arrival.layout.dx, target.dx},
                            {arrival.layout.dc, target.dc},
                            {arrival.layout.dy, target.dy}};
  // Destination offset of each source index.
  std::vector<int> map;
  map.reserve(arrival.layout.total());
  int dst_off = 0;
  for (const SlotPair& s : slots) {
    if (s.src > s.dst) {
      throw Error(ErrorCode::DimensionMismatch,
                  "arrival slot may not shrink");
    }
    for (int i = 0; i < s.src; ++i) map.push_back(dst_off + i);
    dst_off += s.dst;
  }

  ArrivalCost out;
  out.layout = target;
  out.t = arrival.t;
  const int nt = target.total();
  const int ns = arrival.layout.total();
  out.M = Eigen::MatrixXd::Zero(nt, nt);
  out.m = Eigen::VectorXd::Zero(nt);
  for (int i = 0; i < ns; ++i) {
    out.m[map[i]] = arrival.m[i];
    for (int j = 0; j < ns; ++j) out.M(map[i], map[j]) = arrival.M(i, j);
  }
  return out;
}

}  // namespace legest

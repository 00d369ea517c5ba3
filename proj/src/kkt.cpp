#include "legest/kkt.hpp"

#include <string>

#include "legest/errors.hpp"

namespace legest {

KktSystem build_kkt(const QpProblem& qp) {
  const int n = static_cast<int>(qp.H.rows());
  const int m = static_cast<int>(qp.G.rows());
  if (qp.H.cols() != n || qp.h.size() != n || (m > 0 && qp.G.cols() != n) ||
      qp.g.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent QP dimensions");
  }

  KktSystem sys;
  sys.n = n;
  sys.m = m;

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
      trips.emplace_back(n + r, c, it.value());
      trips.emplace_back(c, n + r, it.value());
    }
  }
  sys.K.resize(n + m, n + m);
  sys.K.setFromTriplets(trips.begin(), trips.end());

  sys.rhs.resize(n + m);
  sys.rhs.head(n) = -qp.h;
  sys.rhs.tail(m) = qp.g;
  return sys;
}

KktSystem reorder_kkt(const KktSystem& sys, const std::vector<int>& group0,
                      const std::vector<int>& group1) {
  const int dim = sys.n + sys.m;
  const int p = static_cast<int>(group0.size());
  const int q = static_cast<int>(group1.size());

  // new-position-of[old index]; -1 marks "not assigned yet".
  std::vector<int> pos(dim, -1);
  int next = 0;
  auto place = [&](const std::vector<int>& idx, const char* name) {
    for (int i : idx) {
      if (i < 0 || i >= dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(name) + " index out of range");
      }
      if (pos[i] != -1) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(name) + " contains duplicate index " +
                        std::to_string(i));
      }
      pos[i] = next++;
    }
  };
  place(group0, "group0");
  place(group1, "group1");
  for (int i = 0; i < dim; ++i) {
    if (pos[i] == -1) pos[i] = next++;
  }

  KktSystem out;
  out.n = sys.n;
  out.m = sys.m;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(sys.K.nonZeros());
  for (int c = 0; c < sys.K.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.K, c); it; ++it) {
      const int r = static_cast<int>(it.row());
      trips.emplace_back(pos[r], pos[c], it.value());
      // Closure check: a group0 row may couple only into group0 or group1.
      if (pos[r] < p && pos[c] >= p + q) {
        throw Error(ErrorCode::Group0NotClosed,
                    "group0 row " + std::to_string(r) +
                        " couples outside group0+group1 (column " +
                        std::to_string(c) + ")");
      }
      if (pos[c] < p && pos[r] >= p + q) {
        throw Error(ErrorCode::Group0NotClosed,
                    "group0 column " + std::to_string(c) +
                        " couples outside group0+group1 (row " +
                        std::to_string(r) + ")");
      }
    }
  }
  out.K.resize(dim, dim);
  out.K.setFromTriplets(trips.begin(), trips.end());
  out.rhs.resize(dim);
  for (int i = 0; i < dim; ++i) out.rhs[pos[i]] = sys.rhs[i];
  return out;
}

}  // namespace legest

#include "legest/dense_ldlt.hpp"

#include <cmath>

namespace legest {

namespace {
// Bunch-Kaufman constant minimizing worst-case element growth.
const double kAlpha = (1.0 + std::sqrt(17.0)) / 8.0;
}  // namespace

void SymmetricIndefiniteLdlt::compute(const Eigen::MatrixXd& A,
                                      double pivot_tol_rel) {
  n_ = static_cast<int>(A.rows());
  f_ = A;
  pivots_.clear();
  singular_ = false;
  scale_ = Eigen::VectorXd::Ones(n_);
  if (n_ == 0) return;

  // Ruiz equilibration: symmetrically rescale so every row/column has unit
  // max-magnitude.  KKT matrices mix weight scales spanning many orders of
  // magnitude; without balancing, a perfectly regular pivot can sit far below
  // any tolerance expressed relative to ||A||.  The congruence D A D keeps
  // inertia and singularity intact, so only solve() needs to compensate.
  Eigen::VectorXd step(n_);
  for (int pass = 0; pass < 3; ++pass) {
    bool balanced = true;
    for (int i = 0; i < n_; ++i) {
      double row_max = 0.0;
      for (int j = 0; j <= i; ++j) row_max = std::max(row_max, std::abs(f_(i, j)));
      for (int j = i + 1; j < n_; ++j)
        row_max = std::max(row_max, std::abs(f_(j, i)));
      if (row_max == 0.0) {
        step[i] = 1.0;  // structurally zero row: leave it for the pivot check
        continue;
      }
      if (row_max > 2.0 || row_max < 0.5) balanced = false;
      step[i] = 1.0 / std::sqrt(row_max);
    }
    if (balanced) break;
    scale_.array() *= step.array();
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j) f_(i, j) *= step[i] * step[j];
  }

  // ||A||_inf of the (equilibrated) symmetric matrix, from the lower triangle.
  double norm_inf = 0.0;
  for (int i = 0; i < n_; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j <= i; ++j) row_sum += std::abs(f_(i, j));
    for (int j = i + 1; j < n_; ++j) row_sum += std::abs(f_(j, i));
    norm_inf = std::max(norm_inf, row_sum);
  }
  const double tol = pivot_tol_rel * norm_inf;
  if (norm_inf == 0.0) {
    singular_ = true;
    return;
  }

  // Symmetric row/column interchange r <-> s (r < s) over the full matrix;
  // only the lower triangle is stored.  Rows being swapped are always at or
  // below the current elimination front, so the already-computed strictly
  // lower L columns swap as plain row segments.
  auto symmetric_swap = [&](int r, int s) {
    if (r == s) return;
    if (r > s) std::swap(r, s);
    for (int j = 0; j < r; ++j) std::swap(f_(r, j), f_(s, j));
    for (int i = r + 1; i < s; ++i) std::swap(f_(i, r), f_(s, i));
    std::swap(f_(r, r), f_(s, s));
    for (int i = s + 1; i < n_; ++i) std::swap(f_(i, r), f_(i, s));
  };

  int k = 0;
  while (k < n_) {
    Pivot piv{1, k, -1, -1};

    const double absakk = std::abs(f_(k, k));
    int imax = k;
    double colmax = 0.0;
    for (int i = k + 1; i < n_; ++i) {
      const double v = std::abs(f_(i, k));
      if (v > colmax) {
        colmax = v;
        imax = i;
      }
    }

    if (std::max(absakk, colmax) < tol) {
      singular_ = true;  // trailing column is numerically zero
      return;
    }

    if (absakk >= kAlpha * colmax) {
      // 1x1 pivot at k, no interchange.
    } else {
      double rowmax = 0.0;
      for (int j = k; j < imax; ++j)
        rowmax = std::max(rowmax, std::abs(f_(imax, j)));
      for (int i = imax + 1; i < n_; ++i)
        rowmax = std::max(rowmax, std::abs(f_(i, imax)));

      if (absakk * rowmax >= kAlpha * colmax * colmax) {
        // 1x1 pivot at k, no interchange.
      } else if (std::abs(f_(imax, imax)) >= kAlpha * rowmax) {
        // 1x1 pivot, bring row imax to the front.
        piv.swap_a = k;
        piv.swap_b = imax;
        symmetric_swap(k, imax);
      } else {
        // 2x2 pivot on rows (k, k+1), bring imax to k+1.
        piv.block = 2;
        if (imax != k + 1) {
          piv.swap_a = k + 1;
          piv.swap_b = imax;
          symmetric_swap(k + 1, imax);
        }
      }
    }

    if (piv.block == 1) {
      const double d = f_(k, k);
      if (std::abs(d) < tol) {
        singular_ = true;
        return;
      }
      const int m = n_ - k - 1;
      if (m > 0) {
        Eigen::VectorXd w = f_.col(k).segment(k + 1, m);
        for (int j = k + 1; j < n_; ++j) {
          const double s = w[j - k - 1] / d;
          if (s != 0.0)
            f_.col(j).segment(j, n_ - j) -= s * w.segment(j - k - 1, n_ - j);
        }
        f_.col(k).segment(k + 1, m) = w / d;
      }
      pivots_.push_back(piv);
      k += 1;
    } else {
      const double d11 = f_(k, k);
      const double d21 = f_(k + 1, k);
      const double d22 = f_(k + 1, k + 1);
      const double det = d11 * d22 - d21 * d21;
      const double maxd =
          std::max({std::abs(d11), std::abs(d21), std::abs(d22)});
      if (maxd < tol || std::abs(det) < tol * maxd) {
        singular_ = true;
        return;
      }
      const int m = n_ - k - 2;
      if (m > 0) {
        Eigen::VectorXd w1 = f_.col(k).segment(k + 2, m);
        Eigen::VectorXd w2 = f_.col(k + 1).segment(k + 2, m);
        // [l1 l2] = [w1 w2] * inv(D)
        Eigen::VectorXd l1 = (d22 * w1 - d21 * w2) / det;
        Eigen::VectorXd l2 = (d11 * w2 - d21 * w1) / det;
        for (int j = k + 2; j < n_; ++j) {
          const double s1 = l1[j - k - 2];
          const double s2 = l2[j - k - 2];
          f_.col(j).segment(j, n_ - j) -=
              s1 * w1.segment(j - k - 2, n_ - j) +
              s2 * w2.segment(j - k - 2, n_ - j);
        }
        f_.col(k).segment(k + 2, m) = l1;
        f_.col(k + 1).segment(k + 2, m) = l2;
      }
      pivots_.push_back(piv);
      k += 2;
    }
  }
}

Eigen::MatrixXd SymmetricIndefiniteLdlt::solve(const Eigen::MatrixXd& rhs) const {
  // The factorization holds D A D (equilibrated); A x = b becomes
  // (D A D) y = D b with x = D y.
  Eigen::MatrixXd z = scale_.asDiagonal() * rhs;

  // x = Q^T y where L D L^T y = Q b: apply the recorded transpositions in
  // factorization order, sweep L, D, L^T, then undo the transpositions.
  for (const Pivot& p : pivots_) {
    if (p.swap_a >= 0) z.row(p.swap_a).swap(z.row(p.swap_b));
  }

  for (const Pivot& p : pivots_) {
    const int k = p.col;
    const int below = (p.block == 1) ? n_ - k - 1 : n_ - k - 2;
    if (below <= 0) continue;
    const int start = k + p.block;
    z.middleRows(start, below).noalias() -=
        f_.col(k).segment(start, below) * z.row(k);
    if (p.block == 2) {
      z.middleRows(start, below).noalias() -=
          f_.col(k + 1).segment(start, below) * z.row(k + 1);
    }
  }

  for (const Pivot& p : pivots_) {
    const int k = p.col;
    if (p.block == 1) {
      z.row(k) /= f_(k, k);
    } else {
      const double d11 = f_(k, k), d21 = f_(k + 1, k), d22 = f_(k + 1, k + 1);
      const double det = d11 * d22 - d21 * d21;
      const Eigen::RowVectorXd z1 = z.row(k);
      const Eigen::RowVectorXd z2 = z.row(k + 1);
      z.row(k) = (d22 * z1 - d21 * z2) / det;
      z.row(k + 1) = (d11 * z2 - d21 * z1) / det;
    }
  }

  for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
    const int k = it->col;
    const int below = (it->block == 1) ? n_ - k - 1 : n_ - k - 2;
    if (below <= 0) continue;
    const int start = k + it->block;
    z.row(k).noalias() -=
        f_.col(k).segment(start, below).transpose() * z.middleRows(start, below);
    if (it->block == 2) {
      z.row(k + 1).noalias() -= f_.col(k + 1).segment(start, below).transpose() *
                                z.middleRows(start, below);
    }
  }

  for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
    if (it->swap_a >= 0) z.row(it->swap_a).swap(z.row(it->swap_b));
  }
  return scale_.asDiagonal() * z;
}

Eigen::VectorXd SymmetricIndefiniteLdlt::solve(const Eigen::VectorXd& rhs) const {
  return solve(Eigen::MatrixXd(rhs)).col(0);
}

void SymmetricIndefiniteLdlt::inertia(int* n_plus, int* n_minus) const {
  int pos = 0, neg = 0;
  for (const Pivot& p : pivots_) {
    const int k = p.col;
    if (p.block == 1) {
      (f_(k, k) > 0.0 ? pos : neg) += 1;
    } else {
      const double d11 = f_(k, k), d21 = f_(k + 1, k), d22 = f_(k + 1, k + 1);
      const double det = d11 * d22 - d21 * d21;
      if (det < 0.0) {
        pos += 1;
        neg += 1;
      } else if (d11 + d22 > 0.0) {
        pos += 2;
      } else {
        neg += 2;
      }
    }
  }
  *n_plus = pos;
  *n_minus = neg;
}

}  // namespace legest

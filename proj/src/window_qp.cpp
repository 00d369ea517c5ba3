#include "legest/window_qp.hpp"

#include <string>

#include "legest/errors.hpp"

namespace legest {

std::vector<int> QpLayout::group_vars(int node) const {
  // Offset arrays carry one sentinel entry past the last node, so the width
  // of every slot is the delta between consecutive offsets.
  std::vector<int> idx;
  auto push_range = [&](const std::vector<int>& section) {
    for (int i = section[node]; i < section[node + 1]; ++i) idx.push_back(i);
  };
  push_range(x_off);
  push_range(dx_off);
  push_range(dc_off);
  push_range(dy_off);
  return idx;
}

AssembledQp assemble_qp(const std::vector<QpNode>& nodes,
                        const ArrivalCost& arrival) {
  const int T = static_cast<int>(nodes.size());
  if (T == 0) {
    throw Error(ErrorCode::DimensionMismatch, "empty node span");
  }

  // ---- variable layout: [x_0..x_T | dx_0..dx_T | dc_0.. | dy_0..] --------
  AssembledQp out;
  QpLayout& L = out.layout;
  L.x_off.resize(T + 1);
  L.dx_off.resize(T + 1);
  L.dc_off.resize(T + 1);
  L.dy_off.resize(T + 1);
  int off = 0;
  for (int k = 0; k < T; ++k) {
    L.x_off[k] = off;
    off += nodes[k].x_dim;
  }
  L.x_off[T] = off;
  for (int k = 0; k < T; ++k) {
    L.dx_off[k] = off;
    off += nodes[k].dx_dim;
  }
  L.dx_off[T] = off;
  for (int k = 0; k < T; ++k) {
    L.dc_off[k] = off;
    off += nodes[k].dc_dim;
  }
  L.dc_off[T] = off;
  for (int k = 0; k < T; ++k) {
    L.dy_off[k] = off;
    off += nodes[k].dy_dim;
  }
  L.dy_off[T] = off;
  L.n = off;

  // ---- row layout ---------------------------------------------------------
  L.row_off.resize(T);
  L.row_cnt.resize(T);
  int rows = 0;
  for (int k = 0; k < T; ++k) {
    L.row_off[k] = rows;
    int cnt = 0;
    for (const ConstraintBlock& b : nodes[k].blocks) {
      cnt += static_cast<int>(b.ax0.rows());
    }
    L.row_cnt[k] = cnt;
    rows += cnt;
  }
  L.m = rows;

  std::vector<Eigen::Triplet<double>> h_trips;
  std::vector<Eigen::Triplet<double>> g_trips;
  Eigen::VectorXd h_vec = Eigen::VectorXd::Zero(L.n);
  Eigen::VectorXd g_vec = Eigen::VectorXd::Zero(L.m);

  auto slot_base = [&](int k, NoiseSlot s) -> int {
    switch (s) {
      case NoiseSlot::Dx: return L.dx_off[k];
      case NoiseSlot::Dc: return L.dc_off[k];
      case NoiseSlot::Dy: return L.dy_off[k];
      default:
        throw Error(ErrorCode::DimensionMismatch, "block noise without slot");
    }
  };
  auto slot_width = [&](const QpNode& nd, NoiseSlot s) -> int {
    switch (s) {
      case NoiseSlot::Dx: return nd.dx_dim;
      case NoiseSlot::Dc: return nd.dc_dim;
      case NoiseSlot::Dy: return nd.dy_dim;
      default: return 0;
    }
  };

  for (int k = 0; k < T; ++k) {
    const QpNode& nd = nodes[k];
    // Ownership bookkeeping: each noise entry must be weighted exactly once.
    std::vector<int> owned(nd.dx_dim + nd.dc_dim + nd.dy_dim, 0);
    auto owned_index = [&](NoiseSlot s, int i) {
      switch (s) {
        case NoiseSlot::Dx: return i;
        case NoiseSlot::Dc: return nd.dx_dim + i;
        default: return nd.dx_dim + nd.dc_dim + i;
      }
    };

    int r = L.row_off[k];
    for (const ConstraintBlock& b : nd.blocks) {
      const int nr = static_cast<int>(b.ax0.rows());
      if (b.ax0.cols() != nd.x_dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "ax0 width does not match node state");
      }
      if (b.rhs.size() != nr) {
        throw Error(ErrorCode::DimensionMismatch, "rhs rows mismatch");
      }

      for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nd.x_dim; ++j) {
          if (b.ax0(i, j) != 0.0)
            g_trips.emplace_back(r + i, L.x_off[k] + j, b.ax0(i, j));
        }
      }
      if (b.ax1.cols() > 0) {
        if (k + 1 >= T) {
          throw Error(ErrorCode::DimensionMismatch,
                      "successor reference past the last node");
        }
        if (b.ax1.rows() != nr || b.ax1.cols() != nodes[k + 1].x_dim) {
          throw Error(ErrorCode::DimensionMismatch, "ax1 shape mismatch");
        }
        for (int i = 0; i < nr; ++i) {
          for (int j = 0; j < nodes[k + 1].x_dim; ++j) {
            if (b.ax1(i, j) != 0.0)
              g_trips.emplace_back(r + i, L.x_off[k + 1] + j, b.ax1(i, j));
          }
        }
      }
      if (b.an.cols() > 0) {
        const int w = static_cast<int>(b.an.cols());
        if (b.an.rows() != nr) {
          throw Error(ErrorCode::DimensionMismatch, "an rows mismatch");
        }
        if (b.slot_offset < 0 ||
            b.slot_offset + w > slot_width(nd, b.slot)) {
          throw Error(ErrorCode::DimensionMismatch,
                      "noise segment outside its slot");
        }
        if (b.noise_cov.rows() != w || b.noise_cov.cols() != w) {
          throw Error(ErrorCode::DimensionMismatch, "noise_cov shape mismatch");
        }
        const int base = slot_base(k, b.slot) + b.slot_offset;
        for (int i = 0; i < nr; ++i) {
          for (int j = 0; j < w; ++j) {
            if (b.an(i, j) != 0.0)
              g_trips.emplace_back(r + i, base + j, b.an(i, j));
          }
        }
        // Weight the owned segment by the inverse covariance.
        Eigen::LLT<Eigen::MatrixXd> llt(b.noise_cov);
        if (llt.info() != Eigen::Success) {
          throw Error(ErrorCode::DimensionMismatch,
                      "noise covariance must be positive definite");
        }
        const Eigen::MatrixXd W =
            llt.solve(Eigen::MatrixXd::Identity(w, w));
        for (int i = 0; i < w; ++i) {
          for (int j = 0; j < w; ++j) {
            const double v = 0.5 * (W(i, j) + W(j, i));
            if (v != 0.0) h_trips.emplace_back(base + i, base + j, v);
          }
          owned[owned_index(b.slot, b.slot_offset + i)] += 1;
        }
      }
      g_vec.segment(r, nr) = b.rhs;
      r += nr;
    }

    for (size_t i = 0; i < owned.size(); ++i) {
      if (owned[i] != 1) {
        throw Error(ErrorCode::DimensionMismatch,
                    "noise entry of node " + std::to_string(k) +
                        " owned " + std::to_string(owned[i]) +
                        " times (expected exactly once)");
      }
    }
  }

  // ---- arrival cost on the leading group -----------------------------------
  const ArrivalCost padded = embed_arrival(arrival, nodes[0].layout());
  const std::vector<int> g0 = L.group_vars(0);
  const int gs = static_cast<int>(g0.size());
  if (padded.layout.total() != gs) {
    throw Error(ErrorCode::DimensionMismatch,
                "arrival layout does not match leading group");
  }
  for (int i = 0; i < gs; ++i) {
    h_vec[g0[i]] += padded.m[i];
    for (int j = 0; j < gs; ++j) {
      if (padded.M(i, j) != 0.0)
        h_trips.emplace_back(g0[i], g0[j], padded.M(i, j));
    }
  }

  out.qp.H.resize(L.n, L.n);
  out.qp.H.setFromTriplets(h_trips.begin(), h_trips.end());
  out.qp.G.resize(L.m, L.n);
  out.qp.G.setFromTriplets(g_trips.begin(), g_trips.end());
  out.qp.h = h_vec;
  out.qp.g = g_vec;
  return out;
}

std::vector<int> group0_kkt_indices(const QpLayout& layout) {
  std::vector<int> idx = layout.group_vars(0);
  for (int r = 0; r < layout.row_cnt[0]; ++r) {
    idx.push_back(layout.n + layout.row_off[0] + r);
  }
  return idx;
}

std::vector<int> group1_var_indices(const QpLayout& layout) {
  return layout.group_vars(1);
}

}  // namespace legest

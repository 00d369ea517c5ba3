#pragma once

#include <Eigen/Dense>
#include <vector>

#include "legest/window_qp.hpp"

namespace legest {

// Sliding-window solver over a chain of QpNodes.  Keeps at most
// window_size + 1 nodes; when a new node would exceed that, the oldest
// node's group (state, noise variables and anchored constraint rows) is
// eliminated from the stacked KKT system by Schur complement and replaced by
// an additive arrival cost on the next node's group.  On linear-Gaussian
// chains the window solution of the newest state is exactly the full-history
// solution.
class WindowEstimator {
 public:
  WindowEstimator(Eigen::VectorXd x0, Eigen::MatrixXd P0, int window_size);

  // Appends a node (its t must exceed the previous node's t), marginalizes
  // if the window overflows, solves the window QP and returns the newest
  // state estimate.
  Eigen::VectorXd step(QpNode node);

  // In-window nodes, oldest first.  Mutable so late-arriving measurements
  // can attach to a node that is already inside the window; the arrival cost
  // is zero-padded onto any slot that appears this way.
  std::vector<QpNode>& window() { return window_; }
  const std::vector<QpNode>& window() const { return window_; }

  // Nodes already marginalized, frozen with the content they had when their
  // group was eliminated.
  const std::vector<QpNode>& frozen() const { return frozen_; }

  // Global index of window().front(); frozen() covers [0, first_index).
  int first_index() const { return static_cast<int>(frozen_.size()); }

  const ArrivalCost& arrival() const { return arrival_; }
  const QpSolution& last_solution() const { return solution_; }
  const QpLayout& last_layout() const { return layout_; }

  // State sub-vector of an in-window node from the last solve.
  Eigen::VectorXd state(int window_idx) const;

  const Eigen::VectorXd& prior_mean() const { return x0_; }
  const Eigen::MatrixXd& prior_cov() const { return P0_; }

  // Test hook: scales the arrival-cost gradient to emulate a corrupted
  // history summary.  Never used outside tests.
  void corrupt_arrival_for_test(double scale);

 private:
  void marginalize_front();

  Eigen::VectorXd x0_;
  Eigen::MatrixXd P0_;
  int window_size_;
  bool started_ = false;
  double last_t_ = 0.0;

  std::vector<QpNode> window_;
  std::vector<QpNode> frozen_;
  ArrivalCost arrival_;
  QpSolution solution_;
  QpLayout layout_;
};

// Full-information solve: one QP over the complete node history with the
// Gaussian prior on the first state.  Shares assemble_qp with the sliding
// window so both consume identical constraint content.
struct FifResult {
  QpSolution solution;
  QpLayout layout;
};

FifResult solve_fif(const std::vector<QpNode>& nodes, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& P0);

// State sub-vector of node k from a full-information solve.
Eigen::VectorXd fif_state(const FifResult& r, int k);

}  // namespace legest

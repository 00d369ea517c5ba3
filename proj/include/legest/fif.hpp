#pragma once

#include <Eigen/Dense>
#include <vector>

#include "legest/mhe_core.hpp"

namespace legest {

// Full-information oracle on the robot problem: one batch QP over the whole
// node history with the Gaussian prior as arrival cost.  Every QP node is
// rebuilt from the as-consumed history through the same constraint builders
// the sliding window uses, so a disagreement between the two isolates the
// marginalization, not the modeling.  Test/diagnostic use only -- its cost
// grows with the history length.
struct FifProblem {
  std::vector<WindowNode> history;
  MheState prior;
  Eigen::MatrixXd P0;
  int n_feet = 0;
  NoiseConfig cfg;
};

// Solves the batch problem over ticks [0, T].  T defaults to the full
// history.
FifResult solve_fif(const FifProblem& problem, int T = -1);

// State estimate of tick k from a batch solve.
MheState fif_mhe_state(const FifResult& r, int k, int n_feet);

}  // namespace legest

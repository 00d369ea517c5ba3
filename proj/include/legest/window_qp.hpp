#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "legest/marginalization.hpp"
#include "legest/qp_solver.hpp"

namespace legest {

enum class BlockKind { Dyn, Lo, Vo, Contact };
enum class NoiseSlot { None, Dx, Dc, Dy };

// One block of constraint rows anchored at a node k.  Rows have the form
//
//   ax0 * x_k + ax1 * x_{k+1} + an * noise = rhs
//
// where `noise` is a segment of the anchor node's noise slot identified by
// (slot, slot_offset).  ax1 and an may be empty (0 columns).  A block whose
// `an` is non-empty *owns* its noise segment and carries its covariance; the
// assembled Hessian weighs the segment by noise_cov^-1.  Contact blocks have
// no noise (hard equality).
struct ConstraintBlock {
  BlockKind kind = BlockKind::Dyn;
  Eigen::MatrixXd ax0;
  Eigen::MatrixXd ax1;
  Eigen::MatrixXd an;
  NoiseSlot slot = NoiseSlot::None;
  int slot_offset = 0;
  Eigen::VectorXd rhs;
  Eigen::MatrixXd noise_cov;
};

// One estimation time step in stacked-QP form: slot widths plus the
// constraint blocks anchored here (blocks may reference the successor state
// but never anything further).
struct QpNode {
  double t = 0.0;
  int x_dim = 0;
  int dx_dim = 0;
  int dc_dim = 0;
  int dy_dim = 0;
  std::vector<ConstraintBlock> blocks;

  GroupLayout layout() const { return GroupLayout{x_dim, dx_dim, dc_dim, dy_dim}; }
};

// Global variable/row indexing of the assembled QP.  The decision vector
// stacks all states first, then all process-noise, camera-noise and
// leg-noise slots, each in node order.  Constraint rows are grouped by
// anchor node.
struct QpLayout {
  std::vector<int> x_off, dx_off, dc_off, dy_off;
  std::vector<int> row_off, row_cnt;
  int n = 0;  // total variables
  int m = 0;  // total rows

  // All variable indices of one node's group, in [x | dx | dc | dy] order.
  std::vector<int> group_vars(int node) const;
};

struct AssembledQp {
  QpProblem qp;
  QpLayout layout;
};

// Assembles nodes plus the arrival cost (anchored at nodes.front(), padded
// onto its current layout if a slot attached late) into one sparse QP.
// Validates that every noise slot entry is owned by exactly one block and
// that successor references stay inside the node span.
AssembledQp assemble_qp(const std::vector<QpNode>& nodes,
                        const ArrivalCost& arrival);

// KKT indices (variables, then constraint rows offset by layout.n) of the
// leading node's group and rows -- the elimination set for marginalization.
std::vector<int> group0_kkt_indices(const QpLayout& layout);

// Variable indices of node 1's group -- the coupling set.
std::vector<int> group1_var_indices(const QpLayout& layout);

}  // namespace legest

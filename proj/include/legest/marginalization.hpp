#pragma once

#include <Eigen/Dense>

#include "legest/kkt.hpp"

namespace legest {

// Variable composition of one estimation node's group in the stacked QP:
// the state itself plus the noise variables attached to this node.  Slots
// are ordered [x | dx | dc | dy]; a slot of width 0 is absent.
struct GroupLayout {
  int x = 0;   // state
  int dx = 0;  // process noise
  int dc = 0;  // camera-increment noise
  int dy = 0;  // leg-measurement noise (stacked)

  int total() const { return x + dx + dc + dy; }

  bool operator==(const GroupLayout&) const = default;
};

// Quadratic summary of everything the estimator has discarded:
//
//   cost_to_add(X) = 0.5 X' M X + m' X      (constant dropped)
//
// over the group variables X of the window's oldest remaining node.  The
// summary is *additive*: the window QP keeps that node's own noise weights
// and constraint rows and adds this term on top, which reproduces the full
// information problem exactly.
struct ArrivalCost {
  Eigen::MatrixXd M;   // layout.total() x layout.total(), symmetric
  Eigen::VectorXd m;
  GroupLayout layout;  // composition of the anchored group
  double t = 0.0;      // timestamp of the anchored node
};

// Schur-complement elimination of the leading block of a reordered KKT
// system.  The first p indices must hold the eliminated group (variables and
// constraint rows), the next q its coupling variables (the surviving node's
// group).  Returns the additive arrival cost
//
//   M = -K10 K00^-1 K01        m = K10 K00^-1 k0
//
// for the surviving group.  Throws SingularK00 when the leading block is
// singular at a pivot threshold of 1e-12 * ||K00||_inf.
ArrivalCost marginalize(const KktSystem& reordered, int p, int q,
                        const GroupLayout& surviving_layout, double t);

// Arrival cost encoding a Gaussian prior x ~ N(x0, P0) on the state slot of
// the first node (noise slots carry no prior).  P0 must be symmetric
// positive definite.
ArrivalCost prior_arrival(const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0,
                          double t);

// Zero-pads an arrival cost onto a wider group layout (a slot grows when a
// late measurement attaches to the node after its summary was computed;
// history says nothing about the fresh noise variables, so their prior
// entries are zero).  Existing entries keep the front of each slot — new
// variables are always appended at a slot's end.  A slot may never shrink.
ArrivalCost embed_arrival(const ArrivalCost& arrival, const GroupLayout& target);

}  // namespace legest

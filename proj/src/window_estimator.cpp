#include "legest/window_estimator.hpp"

#include <string>

#include "legest/errors.hpp"

namespace legest {

WindowEstimator::WindowEstimator(Eigen::VectorXd x0, Eigen::MatrixXd P0,
                                 int window_size)
    : x0_(std::move(x0)), P0_(std::move(P0)), window_size_(window_size) {
  if (window_size_ < 1) {
    throw Error(ErrorCode::DimensionMismatch, "window size must be >= 1");
  }
}

Eigen::VectorXd WindowEstimator::step(QpNode node) {
  if (started_ && !(node.t > last_t_)) {
    throw Error(ErrorCode::ClockRegression,
                "node time " + std::to_string(node.t) +
                    " does not advance past " + std::to_string(last_t_));
  }
  if (!started_) {
    if (node.x_dim != x0_.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "first node state does not match prior");
    }
    arrival_ = prior_arrival(x0_, P0_, node.t);
    started_ = true;
  }
  last_t_ = node.t;
  window_.push_back(std::move(node));

  if (static_cast<int>(window_.size()) > window_size_ + 1) {
    marginalize_front();
  }

  AssembledQp assembled = assemble_qp(window_, arrival_);
  solution_ = solve_eq_qp(assembled.qp);
  layout_ = assembled.layout;
  return state(static_cast<int>(window_.size()) - 1);
}

void WindowEstimator::marginalize_front() {
  AssembledQp pre = assemble_qp(window_, arrival_);
  KktSystem kkt = build_kkt(pre.qp);
  const std::vector<int> g0 = group0_kkt_indices(pre.layout);
  const std::vector<int> g1 = group1_var_indices(pre.layout);
  KktSystem reordered = reorder_kkt(kkt, g0, g1);
  arrival_ = marginalize(reordered, static_cast<int>(g0.size()),
                         static_cast<int>(g1.size()), window_[1].layout(),
                         window_[1].t);
  frozen_.push_back(std::move(window_.front()));
  window_.erase(window_.begin());
}

Eigen::VectorXd WindowEstimator::state(int window_idx) const {
  const int nx = window_[window_idx].x_dim;
  return solution_.x.segment(layout_.x_off[window_idx], nx);
}

void WindowEstimator::corrupt_arrival_for_test(double scale) {
  arrival_.m *= scale;
}

FifResult solve_fif(const std::vector<QpNode>& nodes, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& P0) {
  if (nodes.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "empty node history");
  }
  ArrivalCost prior = prior_arrival(x0, P0, nodes.front().t);
  AssembledQp assembled = assemble_qp(nodes, prior);
  FifResult out;
  out.solution = solve_eq_qp(assembled.qp);
  out.layout = assembled.layout;
  return out;
}

Eigen::VectorXd fif_state(const FifResult& r, int k) {
  return r.solution.x.segment(r.layout.x_off[k],
                              r.layout.x_off[k + 1] - r.layout.x_off[k]);
}

}  // namespace legest

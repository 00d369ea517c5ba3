#include "legest/mhe_core.hpp"

#include <cmath>
#include <utility>

#include "legest/errors.hpp"
#include "legest/math_core.hpp"

namespace legest {

namespace {

// Nodes must carry one sample slot per foot even when a foot has no data.
void require_feet(const WindowNode& node, int n_feet) {
  if (static_cast<int>(node.feet.size()) != n_feet) {
    throw Error(ErrorCode::DimensionMismatch,
                "node carries " + std::to_string(node.feet.size()) +
                    " foot samples, expected " + std::to_string(n_feet));
  }
}

Eigen::Matrix3d symmetrized(const Eigen::Matrix3d& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

MheState MheState::from_vector(const Eigen::VectorXd& x, int n_feet) {
  if (x.size() != dim(n_feet)) {
    throw Error(ErrorCode::DimensionMismatch,
                "state vector has " + std::to_string(x.size()) +
                    " entries, expected " + std::to_string(dim(n_feet)));
  }
  MheState s;
  s.p = x.segment<3>(0);
  s.v = x.segment<3>(3);
  s.p_foot.resize(n_feet);
  for (int f = 0; f < n_feet; ++f) s.p_foot[f] = x.segment<3>(6 + 3 * f);
  s.b_a = x.segment<3>(6 + 3 * n_feet);
  return s;
}

Eigen::VectorXd MheState::to_vector() const {
  const int n_feet = static_cast<int>(p_foot.size());
  Eigen::VectorXd x(dim(n_feet));
  x.segment<3>(0) = p;
  x.segment<3>(3) = v;
  for (int f = 0; f < n_feet; ++f) x.segment<3>(6 + 3 * f) = p_foot[f];
  x.segment<3>(6 + 3 * n_feet) = b_a;
  return x;
}

ConstraintBlock build_dynamics_constraint(const WindowNode& node_k,
                                          const WindowNode& node_k1,
                                          int n_feet, const NoiseConfig& cfg) {
  require_feet(node_k, n_feet);
  require_feet(node_k1, n_feet);
  const double dt = cfg.dt();
  if (std::abs((node_k1.t - node_k.t) - dt) > 1e-6) {
    throw Error(ErrorCode::NonConsecutiveNodes,
                "node spacing deviates from the tick period");
  }

  const int n = MheState::dim(n_feet);
  const int ib = 6 + 3 * n_feet;  // accelerometer-bias offset
  const Eigen::Matrix3d& R = node_k.R;
  const Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  A.block<3, 3>(0, 3) = dt * I3;
  A.block<3, 3>(0, ib) = -0.5 * dt * dt * R;
  A.block<3, 3>(3, ib) = -dt * R;

  const Eigen::Vector3d u = R * node_k.a + gravity_world();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b.segment<3>(0) = 0.5 * dt * dt * u;
  b.segment<3>(3) = dt * u;

  // The process noise enters the state as
  //   [R dp + 1/2 dt^2 R da ; dt R da ; R dfoot ; dba],
  // so the state-space covariance is S blkdiag(Q_p,Q_a,Q_foot,Q_ba) S^T.
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  S.block<3, 3>(0, 0) = R;
  S.block<3, 3>(0, 3) = 0.5 * dt * dt * R;
  S.block<3, 3>(3, 3) = dt * R;
  for (int f = 0; f < n_feet; ++f) S.block<3, 3>(6 + 3 * f, 6 + 3 * f) = R;
  S.block<3, 3>(ib, ib) = I3;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  D.block<3, 3>(0, 0) = cfg.Q_p;
  D.block<3, 3>(3, 3) = cfg.Q_a;
  for (int f = 0; f < n_feet; ++f) D.block<3, 3>(6 + 3 * f, 6 + 3 * f) = cfg.Q_foot;
  D.block<3, 3>(ib, ib) = cfg.Q_ba;

  Eigen::MatrixXd Qx = S * D * S.transpose();
  Qx = 0.5 * (Qx + Qx.transpose());

  ConstraintBlock blk;
  blk.kind = BlockKind::Dyn;
  blk.ax0 = -A;
  blk.ax1 = Eigen::MatrixXd::Identity(n, n);
  blk.an = -Eigen::MatrixXd::Identity(n, n);
  blk.slot = NoiseSlot::Dx;
  blk.slot_offset = 0;
  blk.rhs = b;
  blk.noise_cov = Qx;
  return blk;
}

ConstraintBlock build_lo_constraint(const WindowNode& node, int foot,
                                    LoForm form, int n_feet,
                                    const NoiseConfig& cfg) {
  require_feet(node, n_feet);
  if (foot < 0 || foot >= n_feet) {
    throw Error(ErrorCode::DimensionMismatch, "foot index out of range");
  }
  const FootSample& fs = node.feet[foot];
  if (!fs.has_kinematics) {
    throw Error(ErrorCode::NoSampleForFoot,
                "no leg-odometry sample for foot " + std::to_string(foot));
  }

  const int n = MheState::dim(n_feet);
  const Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();
  ConstraintBlock blk;
  blk.kind = BlockKind::Lo;
  blk.slot = NoiseSlot::Dy;
  blk.slot_offset = 0;
  blk.ax0 = Eigen::MatrixXd::Zero(3, n);
  blk.an = I3;

  if (form == LoForm::Position) {
    // p - p_foot + noise = -R fk
    blk.ax0.block<3, 3>(0, 0) = I3;
    blk.ax0.block<3, 3>(0, 6 + 3 * foot) = -I3;
    blk.rhs = -(node.R * fs.fk);
    blk.noise_cov = symmetrized(node.R * cfg.Q_pf * node.R.transpose());
  } else {
    // v + noise = -R jd - R (w - bw)^x fk, valid only during contact
    if (!fs.contact) {
      throw Error(ErrorCode::VelocityFormWithoutContact,
                  "velocity form requires contact on foot " +
                      std::to_string(foot));
    }
    if (!fs.has_joint_velocity) {
      throw Error(ErrorCode::NoSampleForFoot,
                  "no joint-velocity sample for foot " + std::to_string(foot));
    }
    blk.ax0.block<3, 3>(0, 3) = I3;
    blk.rhs = -(node.R * fs.jd) - node.R * skew(node.w - node.bw) * fs.fk;
    blk.noise_cov =
        symmetrized(node.R * (cfg.Q_vf + cfg.Q_slip) * node.R.transpose());
  }
  return blk;
}

std::optional<ConstraintBlock> build_contact_constraint(
    const WindowNode& node_k, const WindowNode& node_k1, int foot,
    int n_feet) {
  require_feet(node_k, n_feet);
  require_feet(node_k1, n_feet);
  if (foot < 0 || foot >= n_feet) {
    throw Error(ErrorCode::DimensionMismatch, "foot index out of range");
  }
  if (!node_k.feet[foot].contact || !node_k1.feet[foot].contact) {
    return std::nullopt;  // foot in flight at either end: no stationarity
  }

  const int n = MheState::dim(n_feet);
  const Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();
  ConstraintBlock blk;
  blk.kind = BlockKind::Contact;
  blk.ax0 = Eigen::MatrixXd::Zero(3, n);
  blk.ax0.block<3, 3>(0, 6 + 3 * foot) = -I3;
  blk.ax1 = Eigen::MatrixXd::Zero(3, n);
  blk.ax1.block<3, 3>(0, 6 + 3 * foot) = I3;
  blk.rhs = Eigen::Vector3d::Zero();
  return blk;
}

int align_to_tick(double t, double rate) {
  const double s = t * rate;
  double k = std::floor(s + 0.5);
  if (k - s == 0.5) k -= 1.0;  // exact halfway: earlier tick wins
  return static_cast<int>(k);
}

std::vector<std::pair<int, Eigen::Vector3d>> VoSynchronizer::add(
    const VoIncrement& inc, const RotationLookup& rot_at, int min_tick) {
  if (!(inc.t_end > inc.t_begin)) {
    throw Error(ErrorCode::UnsortedVoFrames,
                "camera increment does not advance in time");
  }
  const int i = align_to_tick(inc.t_begin, rate_);
  const int j = align_to_tick(inc.t_end, rate_);
  if (!ticks_.empty() && i < ticks_.back()) {
    throw Error(ErrorCode::UnsortedVoFrames,
                "camera increment starts before the previous frame");
  }
  if (j <= i) return {};  // collapses on the tick grid; nothing to constrain

  const Eigen::Vector3d d = rot_at(i) * inc.translation_body;
  if (ticks_.empty() || i != ticks_.back()) {
    // Time gap (or first increment): restart the cumulative chain.
    chain_len_ = 1;
    ticks_.assign(1, i);
    points_.assign(1, Eigen::Vector3d::Zero());
  }
  ticks_.push_back(j);
  points_.push_back(points_.back() + d);
  ++chain_len_;
  if (ticks_.size() > 4) {
    ticks_.erase(ticks_.begin());
    points_.erase(points_.begin());
  }

  // Trailing segment of the chain's path: after m increments the tail holds
  // 2 points (elevated line), 3 (elevated quadratic) or 4 (full cubic),
  // cycling as segments complete every third increment.
  const long m = chain_len_ - 1;
  const int tail = (m % 3 == 1) ? 2 : (m % 3 == 2) ? 3 : 4;
  const std::vector<Eigen::Vector3d> cps(points_.end() - tail, points_.end());
  const std::vector<int> cts(ticks_.end() - tail, ticks_.end());

  const double dt = 1.0 / rate_;
  std::vector<Eigen::Vector3d> cubic;
  std::vector<double> knots;
  if (tail == 4) {
    cubic = cps;
    knots = {cts[0] * dt, cts[1] * dt, cts[2] * dt, cts[3] * dt};
  } else {
    cubic = elevate_to_cubic(cps);
    const double t0 = cts.front() * dt;
    const double t1 = cts.back() * dt;
    knots = {t0, t0 + (t1 - t0) / 3.0, t0 + 2.0 * (t1 - t0) / 3.0, t1};
  }
  const BezierPath path(std::move(cubic), std::move(knots));

  std::vector<std::pair<int, Eigen::Vector3d>> out;
  for (int k = std::max(i, min_tick); k < j; ++k) {
    out.emplace_back(k, path.eval((k + 1) * dt) - path.eval(k * dt));
  }
  return out;
}

std::vector<std::pair<int, Eigen::Vector3d>> align_and_interpolate_vo(
    const std::vector<VoIncrement>& increments, double rate,
    const RotationLookup& rot_at, int min_tick) {
  VoSynchronizer chain(rate);
  std::vector<std::pair<int, Eigen::Vector3d>> out;
  for (const VoIncrement& inc : increments) {
    auto emitted = chain.add(inc, rot_at, min_tick);
    out.insert(out.end(), emitted.begin(), emitted.end());
  }
  return out;
}

QpNode make_qp_node(const WindowNode& node, int n_feet,
                    const NoiseConfig& cfg) {
  require_feet(node, n_feet);
  QpNode qp;
  qp.t = node.t;
  qp.x_dim = MheState::dim(n_feet);
  for (int f = 0; f < n_feet; ++f) {
    const FootSample& fs = node.feet[f];
    if (!fs.has_kinematics) continue;
    if (cfg.lo_policy != LoPolicy::VelocityOnly) {
      ConstraintBlock blk =
          build_lo_constraint(node, f, LoForm::Position, n_feet, cfg);
      blk.slot_offset = qp.dy_dim;
      qp.dy_dim += 3;
      qp.blocks.push_back(std::move(blk));
    }
    if (cfg.lo_policy != LoPolicy::PositionOnly && fs.contact &&
        fs.has_joint_velocity) {
      ConstraintBlock blk =
          build_lo_constraint(node, f, LoForm::Velocity, n_feet, cfg);
      blk.slot_offset = qp.dy_dim;
      qp.dy_dim += 3;
      qp.blocks.push_back(std::move(blk));
    }
  }
  return qp;
}

void attach_successor_blocks(QpNode& qp_prev, const WindowNode& prev,
                             const WindowNode& next, int n_feet,
                             const NoiseConfig& cfg) {
  if (qp_prev.dx_dim != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "dynamics already attached to this node");
  }
  qp_prev.blocks.push_back(build_dynamics_constraint(prev, next, n_feet, cfg));
  qp_prev.dx_dim = MheState::dim(n_feet);
  for (int f = 0; f < n_feet; ++f) {
    if (auto blk = build_contact_constraint(prev, next, f, n_feet)) {
      qp_prev.blocks.push_back(std::move(*blk));
    }
  }
}

void attach_vo_block(QpNode& qp_node, const Eigen::Vector3d& increment,
                     int n_feet, const NoiseConfig& cfg) {
  const int n = MheState::dim(n_feet);
  if (qp_node.x_dim != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "node state width does not match the foot count");
  }
  if (qp_node.dc_dim != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "camera row already attached to this node");
  }
  const Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();
  ConstraintBlock blk;
  blk.kind = BlockKind::Vo;
  blk.slot = NoiseSlot::Dc;
  blk.slot_offset = 0;
  // p_{k+1} - p_k + noise = world-frame camera displacement
  blk.ax0 = Eigen::MatrixXd::Zero(3, n);
  blk.ax0.block<3, 3>(0, 0) = -I3;
  blk.ax1 = Eigen::MatrixXd::Zero(3, n);
  blk.ax1.block<3, 3>(0, 0) = I3;
  blk.an = I3;
  blk.rhs = increment;
  blk.noise_cov = cfg.Q_vo;
  qp_node.dc_dim = 3;
  qp_node.blocks.push_back(std::move(blk));
}

MheEstimator::MheEstimator(const MheState& prior, const Eigen::MatrixXd& P0,
                           int n_feet, const NoiseConfig& cfg)
    : n_feet_(n_feet),
      cfg_(cfg),
      core_(prior.to_vector(), P0, cfg.window_size),
      vo_chain_(cfg.rate) {
  if (static_cast<int>(prior.p_foot.size()) != n_feet) {
    throw Error(ErrorCode::DimensionMismatch,
                "prior foot count does not match the estimator's");
  }
}

void MheEstimator::add_vo(const VoIncrement& inc,
                          const RotationLookup& rot_at) {
  vo_queue_.push_back(PendingVo{inc, rot_at});
}

MheState MheEstimator::step(const WindowNode& node) {
  require_feet(node, n_feet_);
  if (node.tick != static_cast<int>(history_.size())) {
    throw Error(ErrorCode::NonConsecutiveNodes,
                "expected tick " + std::to_string(history_.size()) + ", got " +
                    std::to_string(node.tick));
  }
  if (!history_.empty()) {
    attach_successor_blocks(core_.window().back(), history_.back(), node,
                            n_feet_, cfg_);
  }
  history_.push_back(node);
  // The synchronizer owns VO attachment; the incoming node never carries one.
  history_.back().has_vo = false;
  history_.back().vo_increment.setZero();

  drain_vo_queue(node.tick);
  const Eigen::VectorXd x = core_.step(make_qp_node(node, n_feet_, cfg_));
  return MheState::from_vector(x, n_feet_);
}

void MheEstimator::drain_vo_queue(int newest_tick) {
  while (!vo_queue_.empty()) {
    // Each increment constrains ticks up to its aligned end frame; wait
    // until that frame's node exists before folding it in.
    if (align_to_tick(vo_queue_.front().inc.t_end, cfg_.rate) > newest_tick) {
      break;
    }
    const PendingVo item = std::move(vo_queue_.front());
    vo_queue_.pop_front();
    const auto emitted =
        vo_chain_.add(item.inc, item.rot_at, core_.first_index());
    for (const auto& [tick, displacement] : emitted) {
      attach_vo_block(core_.window()[tick - core_.first_index()], displacement,
                      n_feet_, cfg_);
      history_[tick].has_vo = true;
      history_[tick].vo_increment = displacement;
    }
  }
}

}  // namespace legest

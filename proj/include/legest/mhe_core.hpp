#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "legest/math_core.hpp"
#include "legest/window_estimator.hpp"

namespace legest {

// State of the linear estimator: base position and velocity in the world
// frame, one world-frame position per foot, and the accelerometer bias in
// the body frame.  Stacked as [p | v | p_foot[0..F) | b_a].
struct MheState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> p_foot;
  Eigen::Vector3d b_a = Eigen::Vector3d::Zero();

  static int dim(int n_feet) { return 9 + 3 * n_feet; }
  static MheState from_vector(const Eigen::VectorXd& x, int n_feet);
  Eigen::VectorXd to_vector() const;
};

// Which leg-odometry measurement forms to build.  The velocity form is only
// valid while the foot is in contact; `PositionAndVelocity` emits the
// position row always and adds the velocity row during contact.
enum class LoPolicy { PositionOnly, VelocityOnly, PositionAndVelocity };

// Noise covariances (all SPD, body frame where applicable) plus the window
// geometry.  The member initializers are the defaults, tuned against the
// bundled simulator scenarios.
struct NoiseConfig {
  // accelerometer white noise, (0.02 m/s^2)^2
  Eigen::Matrix3d Q_a = 4e-4 * Eigen::Matrix3d::Identity();
  // gyroscope white noise, (0.002 rad/s)^2
  Eigen::Matrix3d Q_w = 4e-6 * Eigen::Matrix3d::Identity();
  // accelerometer bias random walk per step
  Eigen::Matrix3d Q_ba = 2.5e-7 * Eigen::Matrix3d::Identity();
  // gyroscope bias random walk per step
  Eigen::Matrix3d Q_bw = 1e-10 * Eigen::Matrix3d::Identity();
  // position integration slack, m^2
  Eigen::Matrix3d Q_p = 1e-8 * Eigen::Matrix3d::Identity();
  // foot relocation freedom per step (large: swing feet move freely), m^2
  Eigen::Matrix3d Q_foot = 1e2 * Eigen::Matrix3d::Identity();
  // leg-kinematic position measurement, (0.01 m)^2
  Eigen::Matrix3d Q_pf = 1e-4 * Eigen::Matrix3d::Identity();
  // leg-kinematic velocity measurement, (m/s)^2
  Eigen::Matrix3d Q_vf = 2e-3 * Eigen::Matrix3d::Identity();
  // contact slip inflation on the velocity form; Q_vf + Q_slip = (0.05)^2
  Eigen::Matrix3d Q_slip = 5e-4 * Eigen::Matrix3d::Identity();
  // visual-odometry increment translation, (0.005 m)^2
  Eigen::Matrix3d Q_vo = 2.5e-5 * Eigen::Matrix3d::Identity();
  // visual-odometry absolute orientation, (0.01 rad)^2
  Eigen::Matrix3d Q_yqc = 1e-4 * Eigen::Matrix3d::Identity();

  int window_size = 20;
  double rate = 200.0;  // estimator ticks per second
  LoPolicy lo_policy = LoPolicy::PositionAndVelocity;

  double dt() const { return 1.0 / rate; }
  static NoiseConfig defaults() { return {}; }
};

// Per-foot leg-odometry sample, already reduced from joint space: `fk` is
// the body-frame base->foot position and `jd` the body-frame joint-space
// foot velocity contribution (Jacobian times joint rates).
struct FootSample {
  bool has_kinematics = false;
  Eigen::Vector3d fk = Eigen::Vector3d::Zero();
  bool has_joint_velocity = false;
  Eigen::Vector3d jd = Eigen::Vector3d::Zero();
  bool contact = false;
};

// Everything one estimator tick contributes: the orientation estimate the
// linear problem is conditioned on, the IMU sample, per-foot leg odometry
// and contact flags, and (attached later, once the covering camera frame
// arrives) the world-frame VO displacement toward the next node.
struct WindowNode {
  int tick = 0;
  double t = 0.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // world from body
  Eigen::Vector3d a = Eigen::Vector3d::Zero();      // accelerometer, body
  Eigen::Vector3d w = Eigen::Vector3d::Zero();      // gyroscope, body
  Eigen::Vector3d bw = Eigen::Vector3d::Zero();     // gyro bias estimate
  std::vector<FootSample> feet;

  bool has_vo = false;
  Eigen::Vector3d vo_increment = Eigen::Vector3d::Zero();  // world, to k+1
};

// x_{k+1} = A_k x_k + b_k + noise: double-integrator position/velocity rows
// driven by the rotated accelerometer sample, identity rows for feet and
// bias, with the bias entering through the rotated -dt couplings.  The
// process covariance stacks Q_p, Q_a, Q_foot, Q_ba through the same rotation
// and dt structure the noise enters the state with.
ConstraintBlock build_dynamics_constraint(const WindowNode& node_k,
                                          const WindowNode& node_k1,
                                          int n_feet, const NoiseConfig& cfg);

// Leg-odometry measurement row for one foot.  Position form measures
// p - p_foot; velocity form measures v and requires the contact flag.
enum class LoForm { Position, Velocity };
ConstraintBlock build_lo_constraint(const WindowNode& node, int foot,
                                    LoForm form, int n_feet,
                                    const NoiseConfig& cfg);

// Hard stationarity rows p_foot_{k+1} = p_foot_k while the foot is in
// contact at both ticks; empty when it is not (a signal, not a failure).
std::optional<ConstraintBlock> build_contact_constraint(
    const WindowNode& node_k, const WindowNode& node_k1, int foot,
    int n_feet);

// Raw visual-odometry increment: body-frame translation between two camera
// frames, stamped with their capture times.
struct VoIncrement {
  double t_begin = 0.0;
  double t_end = 0.0;
  Eigen::Vector3d translation_body = Eigen::Vector3d::Zero();
};

// Nearest tick on the fixed estimator grid; exact halfway points round to
// the earlier tick.
int align_to_tick(double t, double rate);

// Rotation estimate at a past tick, supplied by the orientation filter's
// history buffer.
using RotationLookup = std::function<Eigen::Matrix3d(int tick)>;

// Aligns camera-frame increments to the estimator grid and converts them to
// per-tick world-frame displacements.  Consecutive increments accumulate
// into a chain of cumulative control points fitted by a cubic Bezier path
// (segment boundaries every third point, partial tails degree-elevated), so
// each emitted tick displacement is the smoothed curve increment.  A time
// gap between increments restarts the chain; increments arriving out of
// order are rejected.
class VoSynchronizer {
 public:
  explicit VoSynchronizer(double rate) : rate_(rate) {}

  // Emits (tick, world displacement tick->tick+1) pairs covered by this
  // increment, skipping ticks before `min_tick` (already out of the window).
  // Empty when the increment collapses to zero ticks after alignment or lies
  // entirely before `min_tick`.
  std::vector<std::pair<int, Eigen::Vector3d>> add(const VoIncrement& inc,
                                                   const RotationLookup& rot_at,
                                                   int min_tick);

 private:
  double rate_;
  long chain_len_ = 0;          // control points since the chain restarted
  std::vector<int> ticks_;      // trailing chain ticks (at most 4)
  std::vector<Eigen::Vector3d> points_;  // trailing cumulative positions
};

// Batch form of the synchronizer: runs the increments through a fresh chain
// and collects every emitted (tick, displacement) pair.
std::vector<std::pair<int, Eigen::Vector3d>> align_and_interpolate_vo(
    const std::vector<VoIncrement>& increments, double rate,
    const RotationLookup& rot_at, int min_tick = 0);

// --- Shared QP-node construction (used by both the sliding window and the
// full-information oracle so both consume identical constraint content) ---

// Node with its leg-odometry blocks; dynamics/contact/VO attach later.
QpNode make_qp_node(const WindowNode& node, int n_feet,
                    const NoiseConfig& cfg);

// Attaches the dynamics block and any contact blocks linking `prev` to
// `next` onto prev's QP node.
void attach_successor_blocks(QpNode& qp_prev, const WindowNode& prev,
                             const WindowNode& next, int n_feet,
                             const NoiseConfig& cfg);

// Attaches the world-frame VO displacement row (p_{k+1} - p_k) to a node.
void attach_vo_block(QpNode& qp_node, const Eigen::Vector3d& increment,
                     int n_feet, const NoiseConfig& cfg);

// Sliding-window estimator over WindowNodes.  Ticks arrive one at a time;
// the dynamics and contact rows linking tick k to k+1 are built when k+1
// arrives, and camera increments attach to the ticks they cover once their
// frame is in (the arrival cost is zero-padded when that tick was already
// summarized).  Keeps the full as-consumed node history so the
// full-information oracle can rebuild the identical problem.
class MheEstimator {
 public:
  MheEstimator(const MheState& prior, const Eigen::MatrixXd& P0, int n_feet,
               const NoiseConfig& cfg);

  // Queues a camera increment; it is folded in on the next step() once the
  // ticks it covers exist.
  void add_vo(const VoIncrement& inc, const RotationLookup& rot_at);

  // Advances one tick and returns the newest state estimate.
  MheState step(const WindowNode& node);

  int n_feet() const { return n_feet_; }
  const NoiseConfig& config() const { return cfg_; }
  int ticks() const { return static_cast<int>(history_.size()); }

  // As-consumed node record, including VO displacements back-filled onto
  // past ticks.  Mutates as new data arrives; snapshot for comparisons.
  const std::vector<WindowNode>& history() const { return history_; }

  const WindowEstimator& core() const { return core_; }
  WindowEstimator& core() { return core_; }

 private:
  void drain_vo_queue(int newest_tick);

  int n_feet_;
  NoiseConfig cfg_;
  WindowEstimator core_;
  std::vector<WindowNode> history_;
  VoSynchronizer vo_chain_;
  struct PendingVo {
    VoIncrement inc;
    RotationLookup rot_at;
  };
  std::deque<PendingVo> vo_queue_;
};

}  // namespace legest

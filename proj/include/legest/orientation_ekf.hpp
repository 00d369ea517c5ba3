#pragma once

#include <Eigen/Dense>
#include <deque>

#include "legest/math_core.hpp"

namespace legest {

// ---------------------------------------------------------------------------
// Error-state attitude filter.
//
// The nominal state is the body->world quaternion q and the gyro bias
// b_omega; the tracked uncertainty lives on the 6-dof error state
// [delta_theta (world-frame rotation vector), delta_b_omega], so P is 6x6
// and never degenerates along the quaternion norm.  Corrections compose as
//   q <- quat_exp(delta_theta) * q.
//
// Three measurement paths feed the filter:
//   * gyro propagation (ekf_predict),
//   * accelerometer gravity direction (ekf_update_gravity) -- observes roll
//     and pitch only; the gain is projected so yaw is bit-exactly untouched,
//   * absolute camera orientation (ekf_update_vo_orientation) -- the only
//     yaw anchor, usually delayed, hence the replay buffer below.
// ---------------------------------------------------------------------------

struct OrientationState {
  UnitQuaternion q;                                    // body -> world
  Eigen::Vector3d b_omega = Eigen::Vector3d::Zero();   // gyro bias, rad/s
  // Covariance of [delta_theta, delta_b_omega].
  Eigen::Matrix<double, 6, 6> P =
      (Eigen::Matrix<double, 6, 6>() << 1e-2 * Eigen::Matrix3d::Identity(),
       Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
       1e-4 * Eigen::Matrix3d::Identity())
          .finished();
};

// Propagate one gyro sample: q+ = quat_exp((omega - b) dt) * q, bias held,
// P pushed through the error-state Jacobian
//   F = [ R(exp(u))  -J_l(u) dt ]          u = (omega - b) dt
//       [ 0           I         ]
// with gyro white noise entering like a bias error and Q_b_omega * dt added
// on the bias block.  Throws NonPositiveDt.
OrientationState ekf_predict(const OrientationState& state,
                             const Eigen::Vector3d& omega_meas, double dt,
                             const Eigen::Matrix3d& Q_omega,
                             const Eigen::Matrix3d& Q_b_omega);

// Iterated update against the gravity direction: innovation
//   z = accel - R(q)^T * g_up,     g_up = -gravity_world()
// with measurement covariance kappa^2 Q_a, kappa = |accel| / |g|, so samples
// far from 1 g count for less.  Samples below 0.1 g throw FreeFallSample and
// above 3 g throw HighAccelSample (impact transients); the caller skips the
// update on either.  The Kalman gain's attitude rows are projected onto the
// horizontal plane before applying, so a gravity update can never rotate the
// estimate about the world vertical (yaw is unobservable from gravity);
// the covariance uses the Joseph form, which stays consistent under a
// modified gain.  Relinearized `iterations` times with early exit once the
// correction settles below 1e-10.
OrientationState ekf_update_gravity(const OrientationState& state,
                                    const Eigen::Vector3d& accel_meas,
                                    const Eigen::Matrix3d& Q_a,
                                    int iterations = 3);

// Iterated update against an absolute orientation measurement, residual
// quat_log(q_vo * q^-1) on the world-frame error, H = [I 0].  The measured
// quaternion's sign is canonicalized against the estimate first (q and -q
// are the same rotation).  This is the only update that corrects yaw.
OrientationState ekf_update_vo_orientation(const OrientationState& state,
                                           const UnitQuaternion& q_vo,
                                           const Eigen::Matrix3d& Q_yqc);

// History ring for delayed absolute-orientation measurements: one row per
// IMU sample holding the inputs and the posterior state after that sample
// was processed (predict-from-previous, then gravity update).  A delayed
// measurement re-anchors at the row nearest its timestamp and the filter
// replays the stored samples forward from there, overwriting the stored
// posteriors along the span.
class EkfHistoryBuffer {
 public:
  struct Row {
    double t = 0.0;
    Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
    Eigen::Vector3d accel = Eigen::Vector3d::Zero();
    OrientationState state;  // posterior after this sample
  };

  // The noise parameters are fixed at construction so a replay re-executes
  // exactly the arithmetic the live filter ran.
  EkfHistoryBuffer(int capacity, const Eigen::Matrix3d& Q_omega,
                   const Eigen::Matrix3d& Q_b_omega,
                   const Eigen::Matrix3d& Q_a, int gravity_iterations = 3);

  // Append one processed sample; drops the oldest row once at capacity.
  // Timestamps must be strictly increasing (ClockRegression otherwise).
  void push(double t, const Eigen::Vector3d& gyro,
            const Eigen::Vector3d& accel, const OrientationState& posterior);

  int size() const { return static_cast<int>(rows_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return rows_.empty(); }
  const Row& row(int i) const { return rows_[i]; }  // oldest first
  const Row& head() const { return rows_.back(); }
  const Row& tail() const { return rows_.front(); }

  // Index of the stored row whose timestamp is closest to t (earlier row on
  // an exact tie).  Throws VoTimestampTooOld when t precedes the oldest row
  // or the buffer is empty.
  int nearest_index(double t) const;

  const Eigen::Matrix3d& Q_omega() const { return Q_omega_; }
  const Eigen::Matrix3d& Q_b_omega() const { return Q_b_omega_; }
  const Eigen::Matrix3d& Q_a() const { return Q_a_; }
  int gravity_iterations() const { return gravity_iterations_; }

  Row& mutable_row(int i) { return rows_[i]; }

 private:
  int capacity_;
  Eigen::Matrix3d Q_omega_, Q_b_omega_, Q_a_;
  int gravity_iterations_;
  std::deque<Row> rows_;
};

// Fold a delayed absolute-orientation measurement into the history: applies
// ekf_update_vo_orientation at the stored posterior nearest vo_time, then
// replays predict + gravity-update for every later row (skipping gravity
// exactly where the gates skip it), overwriting the stored posteriors.
// Returns the new head posterior, which replaces the live state.  Throws
// VoTimestampTooOld when vo_time precedes the buffer.
OrientationState ekf_replay(EkfHistoryBuffer& buffer, double vo_time,
                            const UnitQuaternion& q_vo,
                            const Eigen::Matrix3d& Q_yqc);

}  // namespace legest

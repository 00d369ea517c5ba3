#include "legest/orientation_ekf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "legest/errors.hpp"

namespace legest {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

constexpr double kIterationExitTol = 1e-10;
constexpr double kFreeFallGate = 0.1;  // fraction of |g|
constexpr double kHighAccelGate = 3.0;

Matrix6d symmetrized(const Matrix6d& P) {
  return 0.5 * (P + P.transpose());
}

// Joseph-form covariance update, valid for any (projected) gain.
Matrix6d joseph_update(const Matrix6d& P, const Eigen::Matrix<double, 6, 3>& K,
                       const Eigen::Matrix<double, 3, 6>& H,
                       const Eigen::Matrix3d& R) {
  const Matrix6d A = Matrix6d::Identity() - K * H;
  return symmetrized(A * P * A.transpose() + K * R * K.transpose());
}

OrientationState apply_correction(const OrientationState& state,
                                  const Vector6d& eta) {
  OrientationState out = state;
  out.q = quat_mul(quat_exp(eta.head<3>()), state.q).normalized();
  out.b_omega = state.b_omega + eta.tail<3>();
  return out;
}

}  // namespace

OrientationState ekf_predict(const OrientationState& state,
                             const Eigen::Vector3d& omega_meas, double dt,
                             const Eigen::Matrix3d& Q_omega,
                             const Eigen::Matrix3d& Q_b_omega) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::NonPositiveDt,
                "prediction step dt = " + std::to_string(dt));
  }

  const Eigen::Vector3d u = (omega_meas - state.b_omega) * dt;
  const UnitQuaternion dq = quat_exp(u);

  OrientationState out;
  out.q = quat_mul(dq, state.q).normalized();
  out.b_omega = state.b_omega;

  // World-frame error transport: delta_theta+ = R(dq) delta_theta
  //   - J_l(u) dt (delta_b + gyro noise).
  const Eigen::Matrix3d Ru = quat_to_rot(dq);
  const Eigen::Matrix3d Jl = so3_left_jacobian(u);
  Matrix6d F = Matrix6d::Identity();
  F.topLeftCorner<3, 3>() = Ru;
  F.topRightCorner<3, 3>() = -Jl * dt;

  Matrix6d Qd = Matrix6d::Zero();
  Qd.topLeftCorner<3, 3>() = Jl * Q_omega * Jl.transpose() * dt * dt;
  Qd.bottomRightCorner<3, 3>() = Q_b_omega * dt;

  out.P = symmetrized(F * state.P * F.transpose() + Qd);
  return out;
}

OrientationState ekf_update_gravity(const OrientationState& state,
                                    const Eigen::Vector3d& accel_meas,
                                    const Eigen::Matrix3d& Q_a,
                                    int iterations) {
  const Eigen::Vector3d g_up = -gravity_world();
  const double g = g_up.norm();
  const double a = accel_meas.norm();
  if (a < kFreeFallGate * g) {
    throw Error(ErrorCode::FreeFallSample,
                "accelerometer magnitude " + std::to_string(a) +
                    " below free-fall gate");
  }
  if (a > kHighAccelGate * g) {
    throw Error(ErrorCode::HighAccelSample,
                "accelerometer magnitude " + std::to_string(a) +
                    " above impact gate");
  }

  // Samples whose magnitude strays from 1 g carry extra specific force, so
  // they are trusted less.
  const double kappa = a / g;
  const Eigen::Matrix3d R_meas = kappa * kappa * Q_a;

  Vector6d eta = Vector6d::Zero();
  Eigen::Matrix<double, 6, 3> K;
  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  OrientationState lin = state;
  for (int it = 0; it < std::max(iterations, 1); ++it) {
    const Eigen::Matrix3d Rt = quat_to_rot(lin.q).transpose();
    // h(q) = R(q)^T g_up; world error delta_theta enters as
    // h = h_lin + R^T skew(g_up) delta_theta.
    H.leftCols<3>() = Rt * skew(g_up);
    const Eigen::Matrix3d S = H * state.P * H.transpose() + R_meas;
    K = state.P * H.transpose() * S.ldlt().solve(Eigen::Matrix3d::Identity());
    // Gravity cannot observe rotation about the vertical: remove the
    // world-z row of the attitude gain so yaw is untouched exactly.
    K.row(2).setZero();

    const Eigen::Vector3d innovation = accel_meas - Rt * g_up;
    const Vector6d eta_next = K * (innovation + H * eta);
    const bool settled = (eta_next - eta).norm() < kIterationExitTol;
    eta = eta_next;
    lin = apply_correction(state, eta);
    if (settled) break;
  }

  OrientationState out = apply_correction(state, eta);
  out.P = joseph_update(state.P, K, H, R_meas);
  return out;
}

OrientationState ekf_update_vo_orientation(const OrientationState& state,
                                           const UnitQuaternion& q_vo,
                                           const Eigen::Matrix3d& Q_yqc) {
  // q and -q are the same rotation; pick the sign nearest the estimate so
  // the log residual stays in the small-angle branch.
  UnitQuaternion meas = q_vo;
  if (meas.xyzw.dot(state.q.xyzw) < 0.0) {
    meas = UnitQuaternion(Eigen::Vector4d(-meas.xyzw));
  }

  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  H.leftCols<3>() = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d S = H * state.P * H.transpose() + Q_yqc;
  const Eigen::Matrix<double, 6, 3> K =
      state.P * H.transpose() * S.ldlt().solve(Eigen::Matrix3d::Identity());

  Vector6d eta = Vector6d::Zero();
  OrientationState lin = state;
  for (int it = 0; it < 3; ++it) {
    const Eigen::Vector3d innovation =
        quat_log(quat_mul(meas, lin.q.conjugate()));
    const Vector6d eta_next = K * (innovation + H * eta);
    const bool settled = (eta_next - eta).norm() < kIterationExitTol;
    eta = eta_next;
    lin = apply_correction(state, eta);
    if (settled) break;
  }

  OrientationState out = apply_correction(state, eta);
  out.P = joseph_update(state.P, K, H, Q_yqc);
  return out;
}

EkfHistoryBuffer::EkfHistoryBuffer(int capacity,
                                   const Eigen::Matrix3d& Q_omega,
                                   const Eigen::Matrix3d& Q_b_omega,
                                   const Eigen::Matrix3d& Q_a,
                                   int gravity_iterations)
    : capacity_(capacity),
      Q_omega_(Q_omega),
      Q_b_omega_(Q_b_omega),
      Q_a_(Q_a),
      gravity_iterations_(gravity_iterations) {
  if (capacity_ <= 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "history capacity must be positive");
  }
}

void EkfHistoryBuffer::push(double t, const Eigen::Vector3d& gyro,
                            const Eigen::Vector3d& accel,
                            const OrientationState& posterior) {
  if (!rows_.empty() && t <= rows_.back().t) {
    throw Error(ErrorCode::ClockRegression,
                "sample time " + std::to_string(t) + " not after " +
                    std::to_string(rows_.back().t));
  }
  rows_.push_back(Row{t, gyro, accel, posterior});
  if (static_cast<int>(rows_.size()) > capacity_) rows_.pop_front();
}

int EkfHistoryBuffer::nearest_index(double t) const {
  if (rows_.empty()) {
    throw Error(ErrorCode::VoTimestampTooOld, "history buffer is empty");
  }
  if (t < rows_.front().t) {
    throw Error(ErrorCode::VoTimestampTooOld,
                "timestamp " + std::to_string(t) + " precedes buffered span");
  }
  int best = 0;
  for (int i = 1; i < size(); ++i) {
    // Strict comparison keeps the earlier row on an exact halfway tie.
    if (std::abs(rows_[i].t - t) < std::abs(rows_[best].t - t)) best = i;
  }
  return best;
}

OrientationState ekf_replay(EkfHistoryBuffer& buffer, double vo_time,
                            const UnitQuaternion& q_vo,
                            const Eigen::Matrix3d& Q_yqc) {
  const int anchor = buffer.nearest_index(vo_time);

  OrientationState state = ekf_update_vo_orientation(
      buffer.row(anchor).state, q_vo, Q_yqc);
  buffer.mutable_row(anchor).state = state;

  for (int i = anchor + 1; i < buffer.size(); ++i) {
    const EkfHistoryBuffer::Row& prev = buffer.row(i - 1);
    const EkfHistoryBuffer::Row& cur = buffer.row(i);
    state = ekf_predict(state, prev.gyro, cur.t - prev.t, buffer.Q_omega(),
                        buffer.Q_b_omega());
    try {
      state = ekf_update_gravity(state, cur.accel, buffer.Q_a(),
                                 buffer.gravity_iterations());
    } catch (const Error& e) {
      // The live filter skipped this sample for the same gate; the gate
      // depends only on the stored accel, so the replay stays in lockstep.
      if (e.code() != ErrorCode::FreeFallSample &&
          e.code() != ErrorCode::HighAccelSample) {
        throw;
      }
    }
    buffer.mutable_row(i).state = state;
  }
  return state;
}

}  // namespace legest

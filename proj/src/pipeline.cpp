#include "legest/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <variant>

#include "legest/errors.hpp"
#include "legest/orientation_ekf.hpp"

namespace legest {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

bool is_gate(const Error& e) {
  return e.code() == ErrorCode::FreeFallSample ||
         e.code() == ErrorCode::HighAccelSample;
}

// First-tick prior: the world frame is declared at the base's horizontal
// position, height is read off the in-contact legs (all legs as a fallback),
// feet sit where the legs say, velocity and bias start at zero.
MheState bootstrap_prior(const WindowNode& node, int n_feet) {
  MheState prior;
  prior.p_foot.assign(n_feet, Vector3d::Zero());

  double height = 0.0;
  int contact_legs = 0, any_legs = 0;
  double height_any = 0.0;
  for (int f = 0; f < n_feet; ++f) {
    if (!node.feet[f].has_kinematics) continue;
    const double h = -(node.R * node.feet[f].fk).z();
    ++any_legs;
    height_any += h;
    if (node.feet[f].contact) {
      ++contact_legs;
      height += h;
    }
  }
  if (contact_legs > 0) {
    height /= contact_legs;
  } else if (any_legs > 0) {
    height = height_any / any_legs;
  }
  prior.p = Vector3d(0.0, 0.0, height);
  for (int f = 0; f < n_feet; ++f) {
    prior.p_foot[f] = node.feet[f].has_kinematics
                          ? Vector3d(prior.p + node.R * node.feet[f].fk)
                          : prior.p;
  }
  return prior;
}

Eigen::MatrixXd bootstrap_covariance(int n_feet) {
  const int n = MheState::dim(n_feet);
  Eigen::MatrixXd P0 = Eigen::MatrixXd::Zero(n, n);
  P0.block<3, 3>(0, 0) = 1e-4 * Matrix3d::Identity();
  P0.block<3, 3>(3, 3) = 1e-2 * Matrix3d::Identity();
  for (int f = 0; f < n_feet; ++f) {
    P0.block<3, 3>(6 + 3 * f, 6 + 3 * f) = 1e-4 * Matrix3d::Identity();
  }
  P0.bottomRightCorner(3, 3) = 1e-2 * Matrix3d::Identity();
  return P0;
}

}  // namespace

PipelineResult run_pipeline(const SensorLog& log, const PipelineOptions& opt) {
  PipelineResult out;
  const int n_feet = log.header.n_feet;
  out.n_feet = n_feet;

  NoiseConfig cfg = opt.noise;
  cfg.rate = log.header.imu_rate;

  // Attitude filter state and its replay history, sized to hold several
  // camera latencies worth of samples.
  OrientationState att;
  const int capacity = std::max<int>(
      128,
      4 * static_cast<int>(std::lround(log.header.vo_latency * cfg.rate)) +
          64);
  EkfHistoryBuffer buffer(capacity, cfg.Q_w, cfg.Q_bw, cfg.Q_a);

  // Rotation at a past tick for camera-increment conversion; clamps to the
  // oldest retained row should an increment outlive the buffer.
  const RotationLookup rot_at = [&buffer, &cfg](int tick) -> Matrix3d {
    const double t = static_cast<double>(tick) / cfg.rate;
    try {
      return quat_to_rot(buffer.row(buffer.nearest_index(t)).state.q);
    } catch (const Error&) {
      return quat_to_rot(buffer.tail().state.q);
    }
  };

  std::optional<MheEstimator> est;
  std::vector<FootSample> pending_feet(n_feet);
  std::vector<bool> pending_contact(n_feet, false);
  std::optional<TruthRecord> pending_truth;
  Vector3d prev_gyro = Vector3d::Zero();
  double prev_t = 0.0;
  bool have_imu = false;

  for (const SensorRecord& record : log.records) {
    if (const auto* vo = std::get_if<VoAbsRecord>(&record)) {
      if (!opt.use_vo || buffer.empty()) continue;
      try {
        att = ekf_replay(buffer, vo->t_frame, vo->q.normalized(), cfg.Q_yqc);
      } catch (const Error& e) {
        // A frame older than the retained history carries stale information
        // only; drop it.
        if (e.code() != ErrorCode::VoTimestampTooOld) throw;
      }
    } else if (const auto* inc = std::get_if<VoIncRecord>(&record)) {
      if (!opt.use_vo || !est) continue;
      est->add_vo(VoIncrement{inc->t_begin, inc->t_end, inc->translation},
                  rot_at);
    } else if (const auto* truth = std::get_if<TruthRecord>(&record)) {
      pending_truth = *truth;
    } else if (const auto* contact = std::get_if<ContactRecord>(&record)) {
      for (int f = 0; f < n_feet; ++f) pending_contact[f] = contact->contact[f];
    } else if (const auto* lo = std::get_if<LoRecord>(&record)) {
      FootSample& s = pending_feet[lo->foot];
      s.has_kinematics = true;
      s.fk = lo->fk;
      s.has_joint_velocity = lo->has_jd;
      s.jd = lo->jd;
    } else if (const auto* imu = std::get_if<ImuRecord>(&record)) {
      if (have_imu) {
        att = ekf_predict(att, prev_gyro, imu->t - prev_t, cfg.Q_w, cfg.Q_bw);
      }
      try {
        att = ekf_update_gravity(att, imu->accel, cfg.Q_a);
      } catch (const Error& e) {
        if (!is_gate(e)) throw;  // free-fall / impact samples carry no tilt
      }
      buffer.push(imu->t, imu->gyro, imu->accel, att);
      prev_gyro = imu->gyro;
      prev_t = imu->t;
      have_imu = true;

      WindowNode node;
      node.tick = align_to_tick(imu->t, cfg.rate);
      node.t = imu->t;
      node.R = quat_to_rot(att.q);
      node.a = imu->accel;
      node.w = imu->gyro;
      node.bw = att.b_omega;
      node.feet = pending_feet;
      for (int f = 0; f < n_feet; ++f) node.feet[f].contact = pending_contact[f];

      if (!est) {
        est.emplace(bootstrap_prior(node, n_feet), bootstrap_covariance(n_feet),
                    n_feet, cfg);
      }
      const auto t0 = std::chrono::steady_clock::now();
      const MheState state = est->step(node);
      const auto t1 = std::chrono::steady_clock::now();

      TraceRow row;
      row.tick = node.tick;
      row.t = imu->t;
      row.state = state;
      row.q = att.q;
      row.b_omega = att.b_omega;
      row.solve_us =
          std::chrono::duration<double, std::micro>(t1 - t0).count();
      out.trace.push_back(row);
      if (opt.on_tick) opt.on_tick(*est, row);

      if (pending_truth &&
          std::abs(pending_truth->t - imu->t) < 0.5 / cfg.rate) {
        out.truth.push_back(*pending_truth);
      }
      pending_truth.reset();
      pending_feet.assign(n_feet, FootSample{});
    }
  }
  return out;
}

}  // namespace legest

#include "legest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "legest/errors.hpp"

namespace legest {

namespace {

// ZYX (yaw-pitch-roll) Euler angles of a rotation matrix.
void euler_zyx(const Eigen::Matrix3d& R, double& roll, double& pitch,
               double& yaw) {
  pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  roll = std::atan2(R(2, 1), R(2, 2));
  yaw = std::atan2(R(1, 0), R(0, 0));
}

}  // namespace

MetricsReport compute_metrics(const std::vector<TraceRow>& trace,
                              const std::vector<TruthRecord>& truth) {
  if (trace.size() != truth.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "trace and truth must be aligned: " +
                    std::to_string(trace.size()) + " vs " +
                    std::to_string(truth.size()) + " rows");
  }
  MetricsReport report;
  report.n_ticks = trace.size();
  if (trace.empty()) return report;

  double ss_v = 0.0, ss_rp = 0.0, ss_yaw = 0.0, ss_h = 0.0, ss_geo = 0.0;
  std::vector<double> solve_us;
  solve_us.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRow& e = trace[i];
    const TruthRecord& g = truth[i];
    const Eigen::Matrix3d R_est = quat_to_rot(e.q);
    const Eigen::Matrix3d R_true = quat_to_rot(g.q.normalized());

    ss_v += (R_est.transpose() * e.state.v - R_true.transpose() * g.v)
                .squaredNorm();
    ss_h += (e.state.p.z() - g.p.z()) * (e.state.p.z() - g.p.z());

    const Eigen::Matrix3d E = R_est.transpose() * R_true;
    double roll, pitch, yaw;
    euler_zyx(E, roll, pitch, yaw);
    ss_rp += roll * roll + pitch * pitch;
    ss_yaw += yaw * yaw;

    const double geo =
        quat_log(quat_mul(e.q, g.q.normalized().conjugate())).norm();
    ss_geo += geo * geo;
    report.max_orientation = std::max(report.max_orientation, geo);

    solve_us.push_back(e.solve_us);
  }
  const double n = static_cast<double>(trace.size());
  report.rmse_v_body = std::sqrt(ss_v / n);
  report.rmse_roll_pitch = std::sqrt(ss_rp / (2.0 * n));
  report.rmse_yaw = std::sqrt(ss_yaw / n);
  report.rmse_height = std::sqrt(ss_h / n);
  report.rmse_orientation = std::sqrt(ss_geo / n);

  double sum = 0.0;
  for (double s : solve_us) sum += s;
  report.solve_mean_us = sum / n;
  std::sort(solve_us.begin(), solve_us.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::ceil(0.99 * static_cast<double>(solve_us.size())));
  report.solve_p99_us = solve_us[std::min(idx, solve_us.size()) - 1];
  return report;
}

}  // namespace legest

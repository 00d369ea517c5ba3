#pragma once

#include <cstddef>

#include "legest/pipeline.hpp"

namespace legest {

// Error statistics of an estimate trace against aligned ground truth.
// Velocity RMSE is taken in the body frame (each side's velocity rotated by
// its own attitude).  Orientation error is split: roll/pitch pooled and yaw
// separate, both from the ZYX Euler angles of the relative rotation
// R_est^T * R_true, plus the frame-free geodesic angle.
struct MetricsReport {
  double rmse_v_body = 0.0;      // m/s
  double rmse_roll_pitch = 0.0;  // rad, pooled over both axes
  double rmse_yaw = 0.0;         // rad
  double rmse_height = 0.0;      // m
  double rmse_orientation = 0.0;  // rad, geodesic
  double max_orientation = 0.0;   // rad, geodesic worst case
  double solve_mean_us = 0.0;
  double solve_p99_us = 0.0;
  std::size_t n_ticks = 0;
};

// Requires trace and truth aligned index-for-index (DimensionMismatch
// otherwise); both empty yields an all-zero report.
MetricsReport compute_metrics(const std::vector<TraceRow>& trace,
                              const std::vector<TruthRecord>& truth);

}  // namespace legest

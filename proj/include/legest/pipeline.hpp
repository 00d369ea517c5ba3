#pragma once

#include <vector>

#include "legest/mhe_core.hpp"
#include "legest/sensor_log.hpp"

namespace legest {

// One estimator tick of output: the linear-state estimate, the attitude the
// window was conditioned on, and the wall-clock cost of the window solve.
struct TraceRow {
  int tick = 0;
  double t = 0.0;
  MheState state;
  UnitQuaternion q;
  Eigen::Vector3d b_omega = Eigen::Vector3d::Zero();
  double solve_us = 0.0;
};

struct PipelineOptions {
  // Estimator tuning.  The tick rate is always taken from the log header,
  // overriding whatever `noise.rate` says, since the estimator grid must be
  // the log's IMU grid.
  NoiseConfig noise = NoiseConfig::defaults();
  // When false, both camera record types are dropped on the floor: the
  // attitude filter runs on gyro + gravity alone and the window gets no
  // translation increments.
  bool use_vo = true;
  // Invoked after every estimator tick with the live window estimator and
  // the trace row just produced.  The estimator's as-consumed history at
  // that moment is exactly the information set its estimate used, so
  // callers can audit the window against batch oracles tick by tick.
  std::function<void(const MheEstimator&, const TraceRow&)> on_tick;
};

struct PipelineResult {
  std::vector<TraceRow> trace;
  // Ground-truth records aligned index-for-index with `trace`; shorter (or
  // empty) when the log carries no truth for some ticks.
  std::vector<TruthRecord> truth;
  int n_feet = 0;

  bool has_aligned_truth() const {
    return !trace.empty() && truth.size() == trace.size();
  }
};

// Replays a sensor log through the full estimator stack in arrival order:
// orientation filter (gyro propagation, gated gravity updates, delayed
// absolute-orientation replay) feeding the sliding-window linear estimator
// (dynamics, leg odometry, contact pinning, camera translation increments).
// The linear state bootstraps on the first IMU tick from leg kinematics:
// horizontal position defines the world origin, height comes from the
// in-contact legs, velocity and bias start at zero.
PipelineResult run_pipeline(const SensorLog& log, const PipelineOptions& opt);

}  // namespace legest

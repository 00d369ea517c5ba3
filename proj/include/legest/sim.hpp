#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "legest/math_core.hpp"
#include "legest/sensor_log.hpp"

namespace legest {

// Built-in locomotion scenarios: a monopod hopper with long aerial phases,
// a quadruped trot with diagonal foot pairs, and a motionless stand.
enum class Scenario { Static, Hopper, Trot };

const char* scenario_name(Scenario s);
bool parse_scenario(const std::string& name, Scenario& out);
int scenario_feet(Scenario s);

// Trajectory geometry plus sensor corruption levels.  Every sigma is a
// standard deviation; noise_scale multiplies all of them and both initial
// bias magnitudes, so noise_scale = 0 yields exact, bias-free streams.
struct SimConfig {
  Scenario scenario = Scenario::Trot;
  double duration = 10.0;  // s
  double imu_rate = 200.0;  // Hz, also the estimator tick rate
  double vo_rate = 30.0;  // Hz camera frame rate
  double vo_latency = 0.05;  // s between frame capture and delivery
  std::uint64_t seed = 1;

  double gait_period = 0.0;  // s; 0 picks the scenario default
  double duty_factor = 0.0;  // stance fraction of the period; 0 as above

  double noise_scale = 1.0;
  double sigma_accel = 0.02;  // m/s^2
  double sigma_gyro = 0.002;  // rad/s
  double sigma_ba_walk = 5e-4;  // m/s^2 accumulated per tick
  double sigma_bw_walk = 1e-5;  // rad/s accumulated per tick
  double sigma_fk = 0.01;  // m, leg kinematic position
  double sigma_jd = 0.04;  // m/s, leg kinematic velocity
  double sigma_vo = 0.005;  // m per axis on camera increments
  double sigma_vo_rot = 0.01;  // rad on the absolute camera orientation
  double init_ba = 0.05;  // m/s^2, initial accelerometer bias magnitude
  double init_bw = 0.005;  // rad/s, initial gyroscope bias magnitude

  int n_feet() const { return scenario_feet(scenario); }
  double dt() const { return 1.0 / imu_rate; }
};

// Ground truth over one tick.  `a` and `omega` are held constant across
// [t, t + dt): the base integrates p/v with the constant-acceleration rule
// and the attitude advances by the exponential of omega * dt, so truth is
// exactly consistent with the estimator's discrete models.
struct TrueState {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  UnitQuaternion q;
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> p_foot;
  std::vector<bool> contact;
  Eigen::Vector3d b_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b_omega = Eigen::Vector3d::Zero();
};

// Deterministic truth for round(duration * imu_rate) ticks.  All scenarios
// start at rest over the origin with identity attitude (so an estimator
// bootstrapping from leg kinematics starts error-free), feet on flat ground
// at z = 0, and sensor biases random-walking from seeded initial vectors.
std::vector<TrueState> generate_trajectory(const SimConfig& cfg);

// Corrupts the truth into time-ordered sensor records: IMU samples with
// bias plus white noise, per-foot leg odometry, contact flags, latency-
// delayed camera increments and absolute orientations, and TRUTH lines.
// Every stored value is quantized to the log precision at creation.
std::vector<SensorRecord> synthesize_sensors(const std::vector<TrueState>& traj,
                                             const SimConfig& cfg);

// generate + synthesize + header, ready to write.
SensorLog simulate(const SimConfig& cfg);

}  // namespace legest

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "legest/math_core.hpp"

namespace legest {

// --- Sensor-log records, one text line each; times in seconds ---

// Absolute camera orientation (world<-body) for the frame taken at t_frame,
// delivered t_arrival - t_frame late.
struct VoAbsRecord {
  double t_arrival = 0.0;
  double t_frame = 0.0;
  UnitQuaternion q;
};

// Camera translation increment between consecutive frames, expressed in the
// body frame at t_begin.
struct VoIncRecord {
  double t_arrival = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// Ground truth at one tick.  Present in simulator logs; estimation never
// reads it, metrics do.
struct TruthRecord {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  UnitQuaternion q;
  std::vector<Eigen::Vector3d> p_foot;
  Eigen::Vector3d b_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b_omega = Eigen::Vector3d::Zero();
};

struct ContactRecord {
  double t = 0.0;
  std::vector<bool> contact;  // one flag per foot
};

// Leg odometry for one foot: body-frame base->foot position, plus the
// joint-space foot velocity term when the leg supplies it (stance only).
struct LoRecord {
  double t = 0.0;
  int foot = 0;
  Eigen::Vector3d fk = Eigen::Vector3d::Zero();
  bool has_jd = false;
  Eigen::Vector3d jd = Eigen::Vector3d::Zero();
};

struct ImuRecord {
  double t = 0.0;
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
};

// The variant order fixes the delivery order of records sharing a
// timestamp: camera results first (so a replay refreshes the orientation
// history before anything consumes it), then truth/contact/leg samples, and
// the IMU sample last since it closes the tick.
using SensorRecord = std::variant<VoAbsRecord, VoIncRecord, TruthRecord,
                                  ContactRecord, LoRecord, ImuRecord>;

// Timestamp a record sorts by: arrival time for camera results, sample time
// otherwise.
double record_time(const SensorRecord& rec);

struct LogHeader {
  int version = 1;
  std::string scenario = "unknown";
  int n_feet = 0;
  double imu_rate = 200.0;
  double vo_rate = 30.0;
  double vo_latency = 0.0;
  double duration = 0.0;
  std::uint64_t seed = 0;
};

struct SensorLog {
  LogHeader header;
  std::vector<SensorRecord> records;
};

// Rounds to the log's storage precision (9 decimal places, half away from
// zero).  The simulator quantizes every value at creation so the in-memory
// stream and a written-then-reread log carry identical numbers.
double quantize9(double v);

std::string serialize_sensor_log(const SensorLog& log);

// Throws IoFailure when the file cannot be written.
void write_sensor_log(const std::string& path, const SensorLog& log);

// Throws IoFailure on unreadable files and LogParse (with the line number)
// on malformed content, unknown record tags, or out-of-order timestamps.
SensorLog read_sensor_log(const std::string& path);

}  // namespace legest

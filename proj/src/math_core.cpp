#include "legest/math_core.hpp"

#include <algorithm>
#include <cmath>

#include "legest/errors.hpp"

namespace legest {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::FewerThanFourControlPoints: return "FewerThanFourControlPoints";
    case ErrorCode::InvalidControlPointCount: return "InvalidControlPointCount";
    case ErrorCode::SampleTimeOutOfRange: return "SampleTimeOutOfRange";
    case ErrorCode::NonMonotoneKnots: return "NonMonotoneKnots";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::FreeFallSample: return "FreeFallSample";
    case ErrorCode::HighAccelSample: return "HighAccelSample";
    case ErrorCode::VoTimestampTooOld: return "VoTimestampTooOld";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonSymmetricHessian: return "NonSymmetricHessian";
    case ErrorCode::RankDeficientConstraints: return "RankDeficientConstraints";
    case ErrorCode::IndefiniteReducedHessian: return "IndefiniteReducedHessian";
    case ErrorCode::SingularKkt: return "SingularKkt";
    case ErrorCode::SingularK00: return "SingularK00";
    case ErrorCode::Group0NotClosed: return "Group0NotClosed";
    case ErrorCode::ClockRegression: return "ClockRegression";
    case ErrorCode::NonConsecutiveNodes: return "NonConsecutiveNodes";
    case ErrorCode::UnsortedVoFrames: return "UnsortedVoFrames";
    case ErrorCode::NoSampleForFoot: return "NoSampleForFoot";
    case ErrorCode::VelocityFormWithoutContact: return "VelocityFormWithoutContact";
    case ErrorCode::LogParse: return "LogParse";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  const Eigen::Vector3d av = a.vec();
  const Eigen::Vector3d bv = b.vec();
  const double aw = a.w();
  const double bw = b.w();
  const Eigen::Vector3d v = aw * bv + bw * av + av.cross(bv);
  const double w = aw * bw - av.dot(bv);
  return UnitQuaternion(v.x(), v.y(), v.z(), w);
}

UnitQuaternion quat_exp(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  const double half = 0.5 * angle;
  double s_over_angle;  // sin(angle/2) / angle
  if (angle < 1e-8) {
    s_over_angle = 0.5 - angle * angle / 48.0;
  } else {
    s_over_angle = std::sin(half) / angle;
  }
  const Eigen::Vector3d v = s_over_angle * rotvec;
  return UnitQuaternion(v.x(), v.y(), v.z(), std::cos(half));
}

Eigen::Vector3d quat_log(const UnitQuaternion& q) {
  // Work on the canonical representative so the result is the principal
  // rotation vector (|r| <= pi).
  const UnitQuaternion c = q.canonical();
  const double vn = c.vec().norm();
  const double w = c.w();
  if (vn < 1e-12) {
    return 2.0 * c.vec();  // first-order: q ~= [v, 1]
  }
  const double angle = 2.0 * std::atan2(vn, w);
  return (angle / vn) * c.vec();
}

Eigen::Matrix3d quat_to_rot(const UnitQuaternion& q) {
  const double x = q.x(), y = q.y(), z = q.z(), w = q.w();
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

UnitQuaternion rot_to_quat(const Eigen::Matrix3d& R) {
  // Shepperd's method: pick the largest of the four squared components.
  const double tr = R.trace();
  double x, y, z, w;
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    w = 0.25 * s;
    x = (R(2, 1) - R(1, 2)) / s;
    y = (R(0, 2) - R(2, 0)) / s;
    z = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2.0;
    w = (R(2, 1) - R(1, 2)) / s;
    x = 0.25 * s;
    y = (R(0, 1) + R(1, 0)) / s;
    z = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2.0;
    w = (R(0, 2) - R(2, 0)) / s;
    x = (R(0, 1) + R(1, 0)) / s;
    y = 0.25 * s;
    z = (R(1, 2) + R(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2.0;
    w = (R(1, 0) - R(0, 1)) / s;
    x = (R(0, 2) + R(2, 0)) / s;
    y = (R(1, 2) + R(2, 1)) / s;
    z = 0.25 * s;
  }
  return UnitQuaternion(x, y, z, w).normalized().canonical();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  return m;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  const Eigen::Matrix3d S = skew(rotvec);
  if (angle < 1e-7) {
    return Eigen::Matrix3d::Identity() + 0.5 * S + S * S / 6.0;
  }
  const double a2 = angle * angle;
  const double c1 = (1.0 - std::cos(angle)) / a2;
  const double c2 = (angle - std::sin(angle)) / (a2 * angle);
  return Eigen::Matrix3d::Identity() + c1 * S + c2 * S * S;
}

Eigen::Vector3d rot_to_euler_zyx(const Eigen::Matrix3d& R) {
  // R = Rz(yaw) * Ry(pitch) * Rx(roll)
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(R(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(R(2, 1), R(2, 2));
    yaw = std::atan2(R(1, 0), R(0, 0));
  } else {
    // Gimbal lock: fold all z-rotation into yaw.
    roll = 0.0;
    yaw = std::atan2(-R(0, 1), R(1, 1));
  }
  return Eigen::Vector3d(roll, pitch, yaw);
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

// --------------------------------------------------------------------------
// BezierPath
// --------------------------------------------------------------------------

BezierPath::BezierPath(std::vector<Eigen::Vector3d> control_points,
                       std::vector<double> knot_times)
    : control_points_(std::move(control_points)),
      knot_times_(std::move(knot_times)) {
  const size_t n = control_points_.size();
  if (n < 4) {
    throw Error(ErrorCode::FewerThanFourControlPoints,
                "need at least 4 control points, got " + std::to_string(n));
  }
  if ((n - 1) % 3 != 0) {
    throw Error(ErrorCode::InvalidControlPointCount,
                "control point count must be 3k+1, got " + std::to_string(n));
  }
  if (knot_times_.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "one knot time per control point required");
  }
  for (size_t i = 1; i < n; ++i) {
    if (!(knot_times_[i] > knot_times_[i - 1])) {
      throw Error(ErrorCode::NonMonotoneKnots,
                  "knot times must be strictly increasing");
    }
  }
  for (size_t i = 0; i + 3 < n; i += 3) {
    segment_starts_.push_back(knot_times_[i]);
  }
}

Eigen::Vector3d BezierPath::eval(double t) const {
  const double t0 = knot_times_.front();
  const double t1 = knot_times_.back();
  const double span_eps = 1e-9 * (1.0 + std::abs(t1 - t0));
  if (t < t0 - span_eps || t > t1 + span_eps) {
    throw Error(ErrorCode::SampleTimeOutOfRange,
                "sample time " + std::to_string(t) + " outside [" +
                    std::to_string(t0) + ", " + std::to_string(t1) + "]");
  }
  t = std::clamp(t, t0, t1);

  // Locate the segment: last segment whose start is <= t.
  size_t seg = 0;
  if (segment_starts_.size() > 1) {
    auto it = std::upper_bound(segment_starts_.begin(), segment_starts_.end(), t);
    seg = static_cast<size_t>(std::distance(segment_starts_.begin(), it));
    if (seg > 0) --seg;
  }
  const size_t base = 3 * seg;
  const double ta = knot_times_[base];
  const double tb = knot_times_[base + 3];
  const double u = (t - ta) / (tb - ta);

  // Cubic Bernstein form.
  const double v = 1.0 - u;
  const double b0 = v * v * v;
  const double b1 = 3.0 * v * v * u;
  const double b2 = 3.0 * v * u * u;
  const double b3 = u * u * u;
  return b0 * control_points_[base] + b1 * control_points_[base + 1] +
         b2 * control_points_[base + 2] + b3 * control_points_[base + 3];
}

std::vector<Eigen::Vector3d> bezier_interpolate(
    const std::vector<Eigen::Vector3d>& control_points,
    const std::vector<double>& knot_times,
    const std::vector<double>& sample_times) {
  BezierPath path(control_points, knot_times);
  std::vector<Eigen::Vector3d> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    out.push_back(path.eval(t));
  }
  return out;
}

std::vector<Eigen::Vector3d> elevate_to_cubic(
    const std::vector<Eigen::Vector3d>& points) {
  if (points.size() == 2) {
    // Line segment: interior points at the thirds.
    const Eigen::Vector3d& a = points[0];
    const Eigen::Vector3d& b = points[1];
    return {a, (2.0 * a + b) / 3.0, (a + 2.0 * b) / 3.0, b};
  }
  if (points.size() == 3) {
    // Quadratic -> cubic degree elevation (same curve).
    const Eigen::Vector3d& a = points[0];
    const Eigen::Vector3d& b = points[1];
    const Eigen::Vector3d& c = points[2];
    return {a, (a + 2.0 * b) / 3.0, (2.0 * b + c) / 3.0, c};
  }
  throw Error(ErrorCode::InvalidControlPointCount,
              "degree elevation expects 2 or 3 points, got " +
                  std::to_string(points.size()));
}

}  // namespace legest

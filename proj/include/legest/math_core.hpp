#pragma once

#include <Eigen/Dense>
#include <vector>

namespace legest {

// ---------------------------------------------------------------------------
// Quaternions.
//
// Convention used throughout this codebase:
//   * storage and constructor order is SCALAR-LAST: [x, y, z, w]
//   * Hamilton product, right-handed
//   * q rotates body-frame vectors into the world frame: v_w = R(q) * v_b
//
// Eigen::Quaterniond also stores xyzw internally but its constructor takes
// (w, x, y, z); to keep the convention unambiguous we use a small dedicated
// type instead.
// ---------------------------------------------------------------------------
struct UnitQuaternion {
  // [x, y, z, w]
  Eigen::Vector4d xyzw;

  UnitQuaternion() : xyzw(0.0, 0.0, 0.0, 1.0) {}
  UnitQuaternion(double x, double y, double z, double w) : xyzw(x, y, z, w) {}
  explicit UnitQuaternion(const Eigen::Vector4d& v) : xyzw(v) {}

  static UnitQuaternion identity() { return UnitQuaternion(); }

  double x() const { return xyzw[0]; }
  double y() const { return xyzw[1]; }
  double z() const { return xyzw[2]; }
  double w() const { return xyzw[3]; }
  Eigen::Vector3d vec() const { return xyzw.head<3>(); }

  UnitQuaternion conjugate() const {
    return UnitQuaternion(-xyzw[0], -xyzw[1], -xyzw[2], xyzw[3]);
  }

  double norm() const { return xyzw.norm(); }

  UnitQuaternion normalized() const {
    return UnitQuaternion(Eigen::Vector4d(xyzw / xyzw.norm()));
  }

  // Flip sign so that w >= 0 (q and -q represent the same rotation).
  UnitQuaternion canonical() const {
    return xyzw[3] < 0.0 ? UnitQuaternion(Eigen::Vector4d(-xyzw)) : *this;
  }
};

// Hamilton product a*b (apply b first, then a, for world-frame composition
// v_w = R(a*b) v = R(a)R(b) v).
UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b);

// Exponential map: rotation vector (axis*angle, rad) -> unit quaternion
//   [sin(|r|/2) * r/|r| , cos(|r|/2)]
// Uses a series expansion near |r| = 0.
UnitQuaternion quat_exp(const Eigen::Vector3d& rotvec);

// Logarithm map: unit quaternion -> rotation vector with |r| <= pi.
Eigen::Vector3d quat_log(const UnitQuaternion& q);

// Direction cosine matrix of q (body -> world).
Eigen::Matrix3d quat_to_rot(const UnitQuaternion& q);

// Inverse of quat_to_rot; returns the canonical (w >= 0) quaternion.
UnitQuaternion rot_to_quat(const Eigen::Matrix3d& R);

// Skew-symmetric cross-product matrix: skew(a)*b == a.cross(b).
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Left Jacobian of SO(3): Exp(r + dr) ~= Exp(J_l(r) dr) * Exp(r).
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& rotvec);

// ZYX (yaw-pitch-roll) Euler angles of a rotation matrix, returned as
// (roll, pitch, yaw).
Eigen::Vector3d rot_to_euler_zyx(const Eigen::Matrix3d& R);

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

// Gravity in the world frame (z up): (0, 0, -9.81) m/s^2.
inline Eigen::Vector3d gravity_world() { return {0.0, 0.0, -9.81}; }

// ---------------------------------------------------------------------------
// Piecewise cubic Bezier path through 3-D control points.
//
// Control points are grouped four at a time into cubic segments that share
// their boundary points: points {0,1,2,3} form segment 0, {3,4,5,6} segment 1,
// and so on, so a path with k segments has 3k+1 control points.  Each segment
// is parameterized linearly in wall-clock time between its first and last
// knot; interior knots only have to be strictly increasing.  The path is C0
// at segment boundaries by construction.
// ---------------------------------------------------------------------------
class BezierPath {
 public:
  // knot_times must be strictly increasing, one per control point, and the
  // number of control points must be 3k+1 with k >= 1.
  BezierPath(std::vector<Eigen::Vector3d> control_points,
             std::vector<double> knot_times);

  // Path position at time t.  t must lie within [front knot, back knot].
  Eigen::Vector3d eval(double t) const;

  double t_begin() const { return knot_times_.front(); }
  double t_end() const { return knot_times_.back(); }

 private:
  std::vector<Eigen::Vector3d> control_points_;
  std::vector<double> knot_times_;
  std::vector<double> segment_starts_;  // first knot of each segment
};

// Evaluates the Bezier path defined by (control_points, knot_times) at the
// given sample times (each within the knot span).  This is the batch form
// used to resample a smoothed path onto an estimator's time grid; increments
// between consecutive samples are simple differences of the returned
// positions and therefore telescope exactly.
std::vector<Eigen::Vector3d> bezier_interpolate(
    const std::vector<Eigen::Vector3d>& control_points,
    const std::vector<double>& knot_times,
    const std::vector<double>& sample_times);

// Degree-elevate a 2-point (linear) or 3-point (quadratic) Bezier control
// polygon to the 4-point cubic polygon tracing the identical curve.  Used to
// complete a trailing partial segment.
std::vector<Eigen::Vector3d> elevate_to_cubic(
    const std::vector<Eigen::Vector3d>& points);

}  // namespace legest

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "chain_harness.hpp"
#include "doctest.h"
#include "legest/errors.hpp"
#include "legest/fif.hpp"
#include "legest/math_core.hpp"
#include "legest/mhe_core.hpp"

using namespace legest;
using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Vector3d axis_angle(n(rng), n(rng), n(rng));
  return quat_to_rot(quat_exp(axis_angle));
}

Vector3d random_vec3(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return Vector3d(n(rng), n(rng), n(rng));
}

// Minimal node: one foot slot, no samples.
WindowNode bare_node(int tick, double dt, int n_feet) {
  WindowNode nd;
  nd.tick = tick;
  nd.t = tick * dt;
  nd.feet.resize(n_feet);
  return nd;
}

}  // namespace

TEST_CASE("mhe state: vector round trip") {
  std::mt19937_64 rng(1);
  MheState s;
  s.p = random_vec3(rng);
  s.v = random_vec3(rng);
  s.p_foot = {random_vec3(rng), random_vec3(rng), random_vec3(rng)};
  s.b_a = random_vec3(rng);
  const VectorXd x = s.to_vector();
  CHECK(x.size() == MheState::dim(3));
  const MheState back = MheState::from_vector(x, 3);
  CHECK((back.to_vector() - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(MheState::from_vector(x, 2), Error);
}

TEST_CASE("dynamics: hovering acceleration cancels gravity") {
  std::mt19937_64 rng(2);
  NoiseConfig cfg;
  const double dt = cfg.dt();
  WindowNode a = bare_node(0, dt, 1);
  WindowNode b = bare_node(1, dt, 1);
  a.R = random_rotation(rng);
  // Accelerometer reading that exactly balances gravity for this attitude.
  a.a = a.R.transpose() * (-gravity_world());

  const ConstraintBlock dyn = build_dynamics_constraint(a, b, 1, cfg);
  MheState x0;
  x0.p = Vector3d(0.4, -0.2, 0.7);
  x0.v = Vector3d(0.1, 0.3, -0.2);
  x0.p_foot = {Vector3d(0.5, 0.0, 0.0)};
  x0.b_a = Vector3d::Zero();

  // x1 = A x0 + b, recovered from the row convention ax0 x0 + ax1 x1 = rhs.
  const VectorXd x1 = dyn.ax1.fullPivLu().solve(dyn.rhs - dyn.ax0 * x0.to_vector());
  const MheState s1 = MheState::from_vector(x1, 1);
  CHECK((s1.v - x0.v).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((s1.p - (x0.p + dt * x0.v)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dynamics: free fall integrates gravity") {
  NoiseConfig cfg;  // rate 200 -> dt 0.005
  WindowNode a = bare_node(0, cfg.dt(), 1);
  WindowNode b = bare_node(1, cfg.dt(), 1);
  a.a = Vector3d::Zero();

  const ConstraintBlock dyn = build_dynamics_constraint(a, b, 1, cfg);
  MheState x0;
  x0.p_foot = {Vector3d::Zero()};
  const VectorXd x1 = dyn.ax1.fullPivLu().solve(dyn.rhs - dyn.ax0 * x0.to_vector());
  const MheState s1 = MheState::from_vector(x1, 1);
  CHECK(s1.v[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s1.v[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s1.v[2] == doctest::Approx(-0.04905).epsilon(1e-12));
}

TEST_CASE("dynamics: propagation matches the componentwise model") {
  std::mt19937_64 rng(3);
  NoiseConfig cfg;
  const double dt = cfg.dt();
  for (int trial = 0; trial < 50; ++trial) {
    const int n_feet = 1 + static_cast<int>(rng() % 3);
    WindowNode a = bare_node(0, dt, n_feet);
    WindowNode b = bare_node(1, dt, n_feet);
    a.R = random_rotation(rng);
    a.a = random_vec3(rng, 3.0);

    MheState x0;
    x0.p = random_vec3(rng);
    x0.v = random_vec3(rng);
    for (int f = 0; f < n_feet; ++f) x0.p_foot.push_back(random_vec3(rng));
    x0.b_a = random_vec3(rng, 0.1);

    const ConstraintBlock dyn = build_dynamics_constraint(a, b, n_feet, cfg);
    const VectorXd x1 =
        dyn.ax1.fullPivLu().solve(dyn.rhs - dyn.ax0 * x0.to_vector());

    // Independent componentwise evaluation of the propagation.
    const Vector3d u = a.R * (a.a - x0.b_a) + gravity_world();
    const Vector3d p1 = x0.p + dt * x0.v + 0.5 * dt * dt * u;
    const Vector3d v1 = x0.v + dt * u;
    const MheState s1 = MheState::from_vector(x1, n_feet);
    CHECK((s1.p - p1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((s1.v - v1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((s1.b_a - x0.b_a).cwiseAbs().maxCoeff() < 1e-14);
    for (int f = 0; f < n_feet; ++f) {
      CHECK((s1.p_foot[f] - x0.p_foot[f]).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("dynamics: process covariance equals the stacked-noise form") {
  std::mt19937_64 rng(4);
  NoiseConfig cfg;
  const double dt = cfg.dt();
  const int n_feet = 2;
  WindowNode a = bare_node(0, dt, n_feet);
  WindowNode b = bare_node(1, dt, n_feet);
  a.R = random_rotation(rng);

  const ConstraintBlock dyn = build_dynamics_constraint(a, b, n_feet, cfg);

  // Push independent unit noises through the stacking by hand.
  const int n = MheState::dim(n_feet);
  MatrixXd S = MatrixXd::Zero(n, n);
  S.block<3, 3>(0, 0) = a.R;
  S.block<3, 3>(0, 3) = 0.5 * dt * dt * a.R;
  S.block<3, 3>(3, 3) = dt * a.R;
  S.block<3, 3>(6, 6) = a.R;
  S.block<3, 3>(9, 9) = a.R;
  S.block<3, 3>(12, 12) = Matrix3d::Identity();
  MatrixXd D = MatrixXd::Zero(n, n);
  D.block<3, 3>(0, 0) = cfg.Q_p;
  D.block<3, 3>(3, 3) = cfg.Q_a;
  D.block<3, 3>(6, 6) = cfg.Q_foot;
  D.block<3, 3>(9, 9) = cfg.Q_foot;
  D.block<3, 3>(12, 12) = cfg.Q_ba;
  const MatrixXd expected = S * D * S.transpose();

  CHECK((dyn.noise_cov - expected).cwiseAbs().maxCoeff() < 1e-12);
  // SPD: the stacking matrix is invertible, so the covariance must be too.
  Eigen::LLT<MatrixXd> llt(dyn.noise_cov);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("dynamics: rejects nodes that are not one tick apart") {
  NoiseConfig cfg;
  WindowNode a = bare_node(0, cfg.dt(), 1);
  WindowNode b = bare_node(2, cfg.dt(), 1);  // two ticks ahead
  CHECK_THROWS_AS(build_dynamics_constraint(a, b, 1, cfg), Error);
  WindowNode c = bare_node(1, cfg.dt(), 1);
  c.t += 1e-4;  // off-grid timestamp
  CHECK_THROWS_AS(build_dynamics_constraint(a, c, 1, cfg), Error);
}

TEST_CASE("leg odometry: position row is satisfied at the true state") {
  std::mt19937_64 rng(5);
  NoiseConfig cfg;
  WindowNode nd = bare_node(0, cfg.dt(), 1);
  nd.R = random_rotation(rng);

  MheState truth;
  truth.p = Vector3d(1.0, 0.0, 0.5);
  truth.p_foot = {Vector3d::Zero()};
  nd.feet[0].has_kinematics = true;
  nd.feet[0].fk = nd.R.transpose() * (truth.p_foot[0] - truth.p);

  const ConstraintBlock blk =
      build_lo_constraint(nd, 0, LoForm::Position, 1, cfg);
  const VectorXd residual = blk.ax0 * truth.to_vector() - blk.rhs;
  CHECK(residual.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("leg odometry: velocity row vanishes in a static stance") {
  std::mt19937_64 rng(6);
  NoiseConfig cfg;
  WindowNode nd = bare_node(0, cfg.dt(), 1);
  nd.R = random_rotation(rng);
  nd.w = random_vec3(rng, 0.5);
  nd.bw = random_vec3(rng, 0.01);

  MheState truth;  // v = 0, foot pinned at the origin
  truth.p = Vector3d(0.2, -0.1, 0.45);
  truth.p_foot = {Vector3d::Zero()};

  FootSample& fs = nd.feet[0];
  fs.has_kinematics = true;
  fs.contact = true;
  fs.fk = nd.R.transpose() * (truth.p_foot[0] - truth.p);
  // Noise-free joint velocity consistent with a stationary foot and base:
  // body-frame relative velocity is zero, so jd absorbs the lever-arm term.
  fs.has_joint_velocity = true;
  fs.jd = -skew(nd.w - nd.bw) * fs.fk;

  const ConstraintBlock blk =
      build_lo_constraint(nd, 0, LoForm::Velocity, 1, cfg);
  const VectorXd residual = blk.ax0 * truth.to_vector() - blk.rhs;
  CHECK(residual.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("leg odometry: isolated velocity rows average like a sample mean") {
  // One node, many feet, velocity rows only: the weighted least-squares
  // estimate of v with identical weights must equal the arithmetic mean of
  // the constructed measurements.
  std::mt19937_64 rng(7);
  NoiseConfig cfg;
  cfg.lo_policy = LoPolicy::VelocityOnly;
  const int n_samples = 100;

  WindowNode nd = bare_node(0, cfg.dt(), n_samples);
  nd.R = random_rotation(rng);
  Vector3d mean = Vector3d::Zero();
  for (int f = 0; f < n_samples; ++f) {
    FootSample& fs = nd.feet[f];
    fs.has_kinematics = true;
    fs.contact = true;
    fs.has_joint_velocity = true;
    const Vector3d sample = Vector3d(0.8, -0.3, 0.1) + random_vec3(rng, 0.05);
    fs.jd = -(nd.R.transpose() * sample);  // makes the measured value `sample`
    mean += sample;
  }
  mean /= n_samples;

  MheState prior;
  prior.p_foot.assign(n_samples, Vector3d::Zero());
  const int n = MheState::dim(n_samples);
  MheEstimator est(prior, 1e12 * MatrixXd::Identity(n, n), n_samples, cfg);
  const MheState out = est.step(nd);
  CHECK((out.v - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("leg odometry: missing samples and swing-phase velocity are rejected") {
  NoiseConfig cfg;
  WindowNode nd = bare_node(0, cfg.dt(), 2);
  nd.feet[0].has_kinematics = true;  // position sample only, no contact

  CHECK_THROWS_AS(build_lo_constraint(nd, 1, LoForm::Position, 2, cfg), Error);
  CHECK_THROWS_AS(build_lo_constraint(nd, 0, LoForm::Velocity, 2, cfg), Error);
  nd.feet[0].contact = true;  // still no joint-velocity sample
  CHECK_THROWS_AS(build_lo_constraint(nd, 0, LoForm::Velocity, 2, cfg), Error);
  CHECK_THROWS_AS(build_lo_constraint(nd, 5, LoForm::Position, 2, cfg), Error);
}

TEST_CASE("contact: stance pair produces the stationarity rows, flight none") {
  NoiseConfig cfg;
  WindowNode a = bare_node(0, cfg.dt(), 2);
  WindowNode b = bare_node(1, cfg.dt(), 2);
  a.feet[1].contact = true;
  b.feet[1].contact = true;

  CHECK(!build_contact_constraint(a, b, 0, 2).has_value());
  const auto blk = build_contact_constraint(a, b, 1, 2);
  REQUIRE(blk.has_value());
  CHECK(blk->kind == BlockKind::Contact);
  CHECK(blk->an.size() == 0);
  CHECK(blk->rhs.cwiseAbs().maxCoeff() == 0.0);

  // Rows must read p_foot[1]_{k+1} - p_foot[1]_k.
  MheState probe;
  probe.p_foot = {Vector3d::Zero(), Vector3d(1.0, 2.0, 3.0)};
  const VectorXd lhs0 = blk->ax0 * probe.to_vector();
  const VectorXd lhs1 = blk->ax1 * probe.to_vector();
  CHECK((lhs0 + Vector3d(1.0, 2.0, 3.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lhs1 - Vector3d(1.0, 2.0, 3.0)).cwiseAbs().maxCoeff() == 0.0);

  // One broken flag at either end suppresses the block.
  b.feet[1].contact = false;
  CHECK(!build_contact_constraint(a, b, 1, 2).has_value());
}

TEST_CASE("vo alignment: nearest tick with earlier tie-break") {
  CHECK(align_to_tick(0.0, 200.0) == 0);
  CHECK(align_to_tick(0.0126, 200.0) == 3);   // 2.52 ticks -> 3
  CHECK(align_to_tick(0.0124, 200.0) == 2);   // 2.48 ticks -> 2
  CHECK(align_to_tick(0.0125, 200.0) == 2);   // exact halfway -> earlier
  CHECK(align_to_tick(0.9975, 200.0) == 199);  // halfway again
}

TEST_CASE("vo synchronizer: single increment telescopes exactly") {
  std::mt19937_64 rng(8);
  const double rate = 200.0;
  for (int trial = 0; trial < 20; ++trial) {
    VoSynchronizer chain(rate);
    const Matrix3d R = random_rotation(rng);
    VoIncrement inc;
    inc.t_begin = 0.0;
    inc.t_end = 0.0333;  // 6.66 ticks -> aligned to 7
    inc.translation_body = random_vec3(rng, 0.05);

    const auto emitted =
        chain.add(inc, [&](int) { return R; }, 0);
    CHECK(emitted.size() == 7);
    Vector3d sum = Vector3d::Zero();
    for (int k = 0; k < static_cast<int>(emitted.size()); ++k) {
      CHECK(emitted[k].first == k);
      sum += emitted[k].second;
    }
    CHECK((sum - R * inc.translation_body).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("vo synchronizer: zero translation emits zero increments") {
  VoSynchronizer chain(200.0);
  VoIncrement inc;
  inc.t_begin = 0.1;
  inc.t_end = 0.14;
  const auto emitted =
      chain.add(inc, [](int) { return Matrix3d::Identity(); }, 0);
  CHECK(emitted.size() == 8);
  for (const auto& [k, y] : emitted) CHECK(y.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("vo synchronizer: straight-line chain reproduces the line exactly") {
  // Uniformly spaced camera frames on a constant-velocity path give
  // collinear, evenly spaced cumulative control points; the fitted path is
  // that line, so every per-tick increment equals v * dt -- including the
  // increments produced by the degree-elevated partial tails.
  const double rate = 200.0;
  const Vector3d v(0.4, -0.1, 0.02);
  const int cam_period = 8;  // ticks; 25 Hz
  VoSynchronizer chain(rate);
  for (int m = 0; m < 7; ++m) {
    VoIncrement inc;
    inc.t_begin = m * cam_period / rate;
    inc.t_end = (m + 1) * cam_period / rate;
    inc.translation_body = v * (cam_period / rate);
    const auto emitted =
        chain.add(inc, [](int) { return Matrix3d::Identity(); }, 0);
    CHECK(emitted.size() == cam_period);
    for (const auto& [k, y] : emitted) {
      CHECK((y - v / rate).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("vo synchronizer: unsorted and overlapping frames are rejected") {
  VoSynchronizer chain(200.0);
  VoIncrement bad;
  bad.t_begin = 0.1;
  bad.t_end = 0.1;
  CHECK_THROWS_AS(chain.add(bad, [](int) { return Matrix3d::Identity(); }, 0),
                  Error);

  VoIncrement first;
  first.t_begin = 0.1;
  first.t_end = 0.15;
  chain.add(first, [](int) { return Matrix3d::Identity(); }, 0);
  VoIncrement overlapping;
  overlapping.t_begin = 0.12;  // starts before the previous end frame
  overlapping.t_end = 0.2;
  CHECK_THROWS_AS(
      chain.add(overlapping, [](int) { return Matrix3d::Identity(); }, 0),
      Error);
}

TEST_CASE("vo synchronizer: gap restarts the chain, min_tick clips spans") {
  VoSynchronizer chain(200.0);
  VoIncrement a;
  a.t_begin = 0.0;
  a.t_end = 0.04;
  a.translation_body = Vector3d(0.1, 0.0, 0.0);
  CHECK(chain.add(a, [](int) { return Matrix3d::Identity(); }, 0).size() == 8);

  // A gap: next increment starts two ticks after the previous end.
  VoIncrement b;
  b.t_begin = 0.05;
  b.t_end = 0.09;
  b.translation_body = Vector3d(0.1, 0.0, 0.0);
  const auto emitted =
      chain.add(b, [](int) { return Matrix3d::Identity(); }, 0);
  REQUIRE(emitted.size() == 8);
  CHECK(emitted.front().first == 10);
  // The restarted chain treats this as its first increment: exact shares.
  Vector3d sum = Vector3d::Zero();
  for (const auto& [k, y] : emitted) sum += y;
  CHECK((sum - Vector3d(0.1, 0.0, 0.0)).cwiseAbs().maxCoeff() < 1e-12);

  // Clipping: ticks below min_tick are withheld.
  VoIncrement c;
  c.t_begin = 0.09;
  c.t_end = 0.13;
  c.translation_body = Vector3d(0.1, 0.0, 0.0);
  const auto clipped =
      chain.add(c, [](int) { return Matrix3d::Identity(); }, 22);
  REQUIRE(!clipped.empty());
  CHECK(clipped.front().first == 22);
  CHECK(clipped.back().first == 25);

  // Entirely stale span: nothing comes out.
  VoIncrement d;
  d.t_begin = 0.13;
  d.t_end = 0.17;
  CHECK(chain.add(d, [](int) { return Matrix3d::Identity(); }, 100).empty());
}

TEST_CASE("vo batch alignment matches the streaming synchronizer") {
  std::mt19937_64 rng(9);
  std::vector<VoIncrement> incs;
  double t = 0.0;
  for (int m = 0; m < 9; ++m) {
    VoIncrement inc;
    inc.t_begin = t;
    t += 0.0333;
    inc.t_end = t;
    inc.translation_body = random_vec3(rng, 0.02);
    incs.push_back(inc);
  }
  const RotationLookup rot = [](int) { return Matrix3d::Identity(); };
  const auto batch = align_and_interpolate_vo(incs, 200.0, rot);

  VoSynchronizer chain(200.0);
  std::vector<std::pair<int, Vector3d>> streamed;
  for (const auto& inc : incs) {
    auto e = chain.add(inc, rot, 0);
    streamed.insert(streamed.end(), e.begin(), e.end());
  }
  REQUIRE(batch.size() == streamed.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch[i].first == streamed[i].first);
    CHECK((batch[i].second - streamed[i].second).cwiseAbs().maxCoeff() == 0.0);
  }
}

// ---------------------------------------------------------------------------
// Synthetic robot data: a per-tick constant-acceleration trajectory with a
// cyclic gait, consistent IMU/LO/VO measurements and a truth track.
// ---------------------------------------------------------------------------

struct RobotDataOptions {
  int n_feet = 2;
  bool constant_velocity = false;
  bool with_vo = true;
  double vo_period = 0.0333;  // seconds between camera frames
  int vo_latency_ticks = 4;
  double noise = 0.0;  // scales all measurement noise
};

struct RobotData {
  std::vector<WindowNode> nodes;
  std::vector<VectorXd> truth;
  // Camera increments with the tick at which each becomes available.
  std::vector<std::pair<int, VoIncrement>> vo;
  std::vector<Matrix3d> rotations;  // truth attitude per tick
  MheState initial;
};

RobotData make_robot_data(std::mt19937_64& rng, int ticks,
                          const NoiseConfig& cfg, const RobotDataOptions& opt) {
  const double dt = cfg.dt();
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto noise3 = [&](double sigma) -> Vector3d {
    return opt.noise * sigma * Vector3d(gauss(rng), gauss(rng), gauss(rng));
  };

  RobotData data;
  const Vector3d ba_true(0.05, -0.02, 0.03);
  const Vector3d bw_true(0.004, -0.002, 0.001);

  // Base trajectory.
  Vector3d p(0.0, 0.0, 0.45);
  Vector3d v(0.35, 0.05, 0.0);
  Matrix3d R = Matrix3d::Identity();
  std::vector<Vector3d> ps(ticks), vs(ticks), as(ticks), ws(ticks);
  std::vector<Matrix3d> Rs(ticks);
  Vector3d a_world = Vector3d::Zero();
  for (int k = 0; k < ticks; ++k) {
    if (!opt.constant_velocity && k % 10 == 0) {
      a_world = Vector3d(gauss(rng), gauss(rng), 0.5 * gauss(rng));
    }
    const Vector3d w_true = opt.constant_velocity
                                ? Vector3d::Zero()
                                : Vector3d(0.2 * gauss(rng), 0.2 * gauss(rng),
                                           0.2 * gauss(rng));
    ps[k] = p;
    vs[k] = v;
    as[k] = opt.constant_velocity ? Vector3d::Zero() : a_world;
    ws[k] = w_true;
    Rs[k] = R;
    p += dt * v + 0.5 * dt * dt * as[k];
    v += dt * as[k];
    R = R * quat_to_rot(quat_exp(w_true * dt));
  }
  data.rotations = Rs;

  // Gait: stance/swing cycle per foot, phase-shifted; stance feet hold a
  // fixed world position, swing feet glide toward the next touchdown.
  const int stance_ticks = 14, swing_ticks = 10;
  const int cycle = stance_ticks + swing_ticks;
  std::vector<Vector3d> foot_pos(opt.n_feet);
  std::vector<Vector3d> foot_vel(opt.n_feet, Vector3d::Zero());
  for (int f = 0; f < opt.n_feet; ++f) {
    foot_pos[f] = ps[0] + Vector3d(0.1 * f, 0.2 * (f % 2 ? 1 : -1), -0.45);
  }

  data.nodes.resize(ticks);
  data.truth.resize(ticks);
  for (int k = 0; k < ticks; ++k) {
    WindowNode& nd = data.nodes[k];
    nd.tick = k;
    nd.t = k * dt;
    nd.R = Rs[k];
    nd.bw = bw_true;
    nd.w = ws[k] + bw_true + noise3(std::sqrt(cfg.Q_w(0, 0)));
    nd.a = Rs[k].transpose() * (as[k] - gravity_world()) + ba_true +
           noise3(std::sqrt(cfg.Q_a(0, 0)));
    nd.feet.resize(opt.n_feet);

    MheState truth;
    truth.p = ps[k];
    truth.v = vs[k];
    truth.b_a = ba_true;

    for (int f = 0; f < opt.n_feet; ++f) {
      const int phase = (k + f * cycle / opt.n_feet) % cycle;
      const bool contact = phase < stance_ticks;
      if (!contact && phase == stance_ticks) {
        // Lift-off: aim for a touchdown point ahead of the base.
        const Vector3d target =
            ps[k] + Vector3d(0.25 + 0.1 * f, 0.2 * (f % 2 ? 1 : -1), -0.45);
        foot_vel[f] = (target - foot_pos[f]) / (swing_ticks * dt);
      }
      if (!contact) {
        foot_pos[f] += dt * foot_vel[f];
      } else {
        foot_vel[f].setZero();
      }

      FootSample& fs = nd.feet[f];
      fs.contact = contact;
      fs.has_kinematics = true;
      fs.fk = Rs[k].transpose() * (foot_pos[f] - ps[k]) +
              noise3(std::sqrt(cfg.Q_pf(0, 0)));
      fs.has_joint_velocity = true;
      fs.jd = Rs[k].transpose() * (foot_vel[f] - vs[k]) -
              skew(nd.w - bw_true) * fs.fk +
              noise3(std::sqrt(cfg.Q_vf(0, 0)));
      truth.p_foot.push_back(foot_pos[f]);
    }
    data.truth[k] = truth.to_vector();
    if (k == 0) data.initial = truth;
  }

  // Camera increments: body-frame displacement between consecutive camera
  // frames, evaluated on the continuous trajectory, delivered with latency.
  if (opt.with_vo) {
    const auto pos_at = [&](double t) {
      int k = std::min(static_cast<int>(t / dt), ticks - 1);
      const double s = t - k * dt;
      return ps[k] + s * vs[k] + 0.5 * s * s * as[k];
    };
    double t0 = 0.0;
    while (true) {
      const double t1 = t0 + opt.vo_period;
      const int end_tick = align_to_tick(t1, cfg.rate);
      if (end_tick >= ticks - 1) break;
      VoIncrement inc;
      inc.t_begin = t0;
      inc.t_end = t1;
      const int start_tick = align_to_tick(t0, cfg.rate);
      inc.translation_body =
          Rs[start_tick].transpose() * (pos_at(t1) - pos_at(t0)) +
          noise3(std::sqrt(cfg.Q_vo(0, 0)));
      data.vo.emplace_back(
          std::min(end_tick + opt.vo_latency_ticks, ticks - 1), inc);
      t0 = t1;
    }
  }
  return data;
}

TEST_CASE("mhe estimator: matches the full-information solve at every tick") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 3; ++trial) {
    NoiseConfig cfg;
    cfg.window_size = 6;
    RobotDataOptions opt;
    opt.noise = 1.0;
    RobotData data = make_robot_data(rng, 60, cfg, opt);

    MheState prior = data.initial;
    prior.p += Vector3d(0.01, -0.02, 0.005);  // deliberately off the truth
    prior.v += Vector3d(-0.03, 0.01, 0.0);
    const int n = MheState::dim(opt.n_feet);
    const MatrixXd P0 = 1e-2 * MatrixXd::Identity(n, n);

    MheEstimator est(prior, P0, opt.n_feet, cfg);
    size_t next_vo = 0;
    for (int k = 0; k < 60; ++k) {
      while (next_vo < data.vo.size() && data.vo[next_vo].first <= k) {
        const Matrix3d* rot_table = data.rotations.data();
        est.add_vo(data.vo[next_vo].second,
                   [rot_table](int tick) { return rot_table[tick]; });
        ++next_vo;
      }
      est.step(data.nodes[k]);

      FifProblem problem{est.history(), prior, P0, opt.n_feet, cfg};
      const FifResult fif = solve_fif(problem);
      // Every in-window state must coincide with the batch solution.
      const int first = est.core().first_index();
      for (int w = 0; w < static_cast<int>(est.core().window().size()); ++w) {
        const VectorXd xw = est.core().state(w);
        const VectorXd xf = fif_state(fif, first + w);
        const double rel = (xw - xf).cwiseAbs().maxCoeff() /
                           (1.0 + xf.cwiseAbs().maxCoeff());
        CHECK(rel < 1e-9);
      }
    }
    CHECK(next_vo > 0);
  }
}

TEST_CASE("mhe estimator: noise-free run recovers the truth") {
  std::mt19937_64 rng(11);
  NoiseConfig cfg;
  cfg.window_size = 15;

  SUBCASE("constant velocity with camera increments") {
    RobotDataOptions opt;
    opt.constant_velocity = true;
    opt.vo_period = 8 * cfg.dt();  // camera frames exactly on the tick grid
    opt.noise = 0.0;
    RobotData data = make_robot_data(rng, 120, cfg, opt);

    const int n = MheState::dim(opt.n_feet);
    MheEstimator est(data.initial, 1e-4 * MatrixXd::Identity(n, n),
                     opt.n_feet, cfg);
    size_t next_vo = 0;
    double worst_base = 0.0, worst_feet = 0.0;
    for (int k = 0; k < 120; ++k) {
      while (next_vo < data.vo.size() && data.vo[next_vo].first <= k) {
        const Matrix3d* rot_table = data.rotations.data();
        est.add_vo(data.vo[next_vo].second,
                   [rot_table](int tick) { return rot_table[tick]; });
        ++next_vo;
      }
      const MheState out = est.step(data.nodes[k]);
      const VectorXd err = out.to_vector() - data.truth[k];
      worst_base = std::max({worst_base,
                             err.head<6>().cwiseAbs().maxCoeff(),
                             err.tail<3>().cwiseAbs().maxCoeff()});
      worst_feet = std::max(
          worst_feet, err.segment(6, 3 * opt.n_feet).cwiseAbs().maxCoeff());
    }
    CHECK(next_vo > 0);
    CHECK(worst_base < 1e-8);
    // Swing feet are only weakly weighted, so their recovery sits closer to
    // the double-precision conditioning floor of the KKT system.
    CHECK(worst_feet < 1e-7);
  }

  SUBCASE("varying acceleration without camera") {
    RobotDataOptions opt;
    opt.with_vo = false;
    opt.noise = 0.0;
    RobotData data = make_robot_data(rng, 120, cfg, opt);

    const int n = MheState::dim(opt.n_feet);
    MheEstimator est(data.initial, 1e-4 * MatrixXd::Identity(n, n),
                     opt.n_feet, cfg);
    double worst_base = 0.0, worst_feet = 0.0;
    for (int k = 0; k < 120; ++k) {
      const MheState out = est.step(data.nodes[k]);
      const VectorXd err = out.to_vector() - data.truth[k];
      worst_base = std::max({worst_base,
                             err.head<6>().cwiseAbs().maxCoeff(),
                             err.tail<3>().cwiseAbs().maxCoeff()});
      worst_feet = std::max(
          worst_feet, err.segment(6, 3 * opt.n_feet).cwiseAbs().maxCoeff());
    }
    CHECK(worst_base < 1e-8);
    CHECK(worst_feet < 1e-7);
  }
}

TEST_CASE("mhe estimator: stance feet are pinned by the hard constraint") {
  std::mt19937_64 rng(12);
  NoiseConfig cfg;
  cfg.window_size = 8;
  RobotDataOptions opt;
  opt.noise = 1.0;
  opt.with_vo = false;
  RobotData data = make_robot_data(rng, 50, cfg, opt);

  const int n = MheState::dim(opt.n_feet);
  MheEstimator est(data.initial, 1e-2 * MatrixXd::Identity(n, n), opt.n_feet,
                   cfg);
  for (int k = 0; k < 50; ++k) est.step(data.nodes[k]);

  // Inspect the final window: for each foot, consecutive in-contact pairs
  // must show an identical estimated foot position.
  const auto& win = est.core().window();
  const int first = est.core().first_index();
  int held_pairs = 0;
  for (size_t w = 0; w + 1 < win.size(); ++w) {
    for (int f = 0; f < opt.n_feet; ++f) {
      const bool both = data.nodes[first + w].feet[f].contact &&
                        data.nodes[first + w + 1].feet[f].contact;
      if (!both) continue;
      const Vector3d foot0 = est.core().state(static_cast<int>(w)).segment<3>(6 + 3 * f);
      const Vector3d foot1 =
          est.core().state(static_cast<int>(w) + 1).segment<3>(6 + 3 * f);
      CHECK((foot1 - foot0).cwiseAbs().maxCoeff() < 1e-9);
      ++held_pairs;
    }
  }
  CHECK(held_pairs > 0);
}

TEST_CASE("mhe estimator: rejects out-of-sequence ticks and foot mismatches") {
  NoiseConfig cfg;
  MheState prior;
  prior.p_foot = {Vector3d::Zero()};
  MheEstimator est(prior, MatrixXd::Identity(12, 12), 1, cfg);

  WindowNode nd = bare_node(1, cfg.dt(), 1);  // tick 0 expected
  CHECK_THROWS_AS(est.step(nd), Error);

  WindowNode wrong_feet = bare_node(0, cfg.dt(), 3);
  CHECK_THROWS_AS(est.step(wrong_feet), Error);
}

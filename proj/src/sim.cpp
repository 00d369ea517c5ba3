#include "legest/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "legest/errors.hpp"

namespace legest {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

double smoothstep01(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * (3.0 - 2.0 * u);
}

// Swing interpolation between footholds: smoothstep blend in the ground
// plane plus a sine lift, strictly positive for s in (0, 1).
Vector3d swing_position(const Vector3d& from, const Vector3d& to, double s,
                        double lift) {
  const double blend = smoothstep01(s);
  Vector3d pos = from + blend * (to - from);
  pos.z() += lift * std::sin(M_PI * s);
  return pos;
}

Vector3d quantize9_vec(const Vector3d& v) {
  return {quantize9(v[0]), quantize9(v[1]), quantize9(v[2])};
}

UnitQuaternion quantize9_quat(const UnitQuaternion& q) {
  return UnitQuaternion(quantize9(q.xyzw[0]), quantize9(q.xyzw[1]),
                        quantize9(q.xyzw[2]), quantize9(q.xyzw[3]));
}

struct FootTrack {
  std::vector<Vector3d> pos;
  std::vector<bool> contact;
};

// Tiles the timeline with stance runs (every `period` ticks starting at
// `off`, lasting `stance`) and swing arcs between consecutive footholds.
// The foothold of a run is the ground projection of the shoulder at the
// run's middle tick, so stance feet are exactly stationary and land where
// the base trajectory will carry them.
FootTrack plan_foot(const std::vector<Vector3d>& p,
                    const std::vector<Matrix3d>& R, const Vector3d& shoulder,
                    long off, long stance, long period, long ticks,
                    double lift) {
  std::vector<long> starts;
  std::vector<Vector3d> holds;
  for (long start = off - period; start < ticks + period; start += period) {
    const long mid = std::clamp(start + stance / 2, 0L, ticks - 1);
    Vector3d hold = p[mid] + R[mid] * shoulder;
    hold.z() = 0.0;
    starts.push_back(start);
    holds.push_back(hold);
  }

  FootTrack out;
  out.pos.resize(ticks);
  out.contact.assign(ticks, false);
  for (std::size_t n = 0; n < starts.size(); ++n) {
    for (long k = std::max(0L, starts[n]);
         k < std::min(ticks, starts[n] + stance); ++k) {
      out.pos[k] = holds[n];
      out.contact[k] = true;
    }
    if (n + 1 == starts.size()) continue;
    const long s0 = starts[n] + stance;
    const long s1 = starts[n + 1];
    for (long k = std::max(0L, s0); k < std::min(ticks, s1); ++k) {
      const double s =
          static_cast<double>(k - s0 + 1) / static_cast<double>(s1 - s0 + 1);
      out.pos[k] = swing_position(holds[n], holds[n + 1], s, lift);
    }
  }
  return out;
}

struct GaitTiming {
  long period = 0;
  long stance = 0;
};

GaitTiming resolve_gait(const SimConfig& cfg, double default_period,
                        double default_duty, bool even_stance) {
  const double period_s =
      cfg.gait_period > 0.0 ? cfg.gait_period : default_period;
  const double duty = cfg.duty_factor > 0.0
                          ? std::clamp(cfg.duty_factor, 0.1, 0.9)
                          : default_duty;
  GaitTiming g;
  g.period = std::lround(period_s * cfg.imu_rate);
  g.stance = std::clamp(std::lround(duty * static_cast<double>(g.period)), 1L,
                        g.period - 1);
  if (even_stance && (g.stance % 2) != 0) {
    g.stance += g.stance + 1 < g.period ? 1 : -1;
  }
  return g;
}

}  // namespace

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Static:
      return "static";
    case Scenario::Hopper:
      return "hopper";
    case Scenario::Trot:
      return "trot";
  }
  return "unknown";
}

bool parse_scenario(const std::string& name, Scenario& out) {
  if (name == "static") {
    out = Scenario::Static;
  } else if (name == "hopper") {
    out = Scenario::Hopper;
  } else if (name == "trot") {
    out = Scenario::Trot;
  } else {
    return false;
  }
  return true;
}

int scenario_feet(Scenario s) { return s == Scenario::Hopper ? 1 : 4; }

std::vector<TrueState> generate_trajectory(const SimConfig& cfg) {
  if (cfg.imu_rate <= 0.0 || cfg.vo_rate <= 0.0 || cfg.duration < 0.0) {
    throw Error(ErrorCode::ConfigParse,
                "simulation rates must be positive and duration non-negative");
  }
  const long ticks = std::lround(cfg.duration * cfg.imu_rate);
  const double dt = cfg.dt();
  const int feet = cfg.n_feet();

  std::vector<TrueState> traj(ticks);
  if (ticks == 0) return traj;

  // Sensor biases: seeded initial directions, then a per-tick random walk.
  // Drawn up front so trajectory geometry stays independent of them.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto draw3 = [&]() -> Vector3d {
    const double x = n01(rng);
    const double y = n01(rng);
    const double z = n01(rng);
    return {x, y, z};
  };
  const auto unit3 = [&]() -> Vector3d {
    const Vector3d v = draw3();
    return v.norm() > 1e-12 ? Vector3d(v / v.norm()) : Vector3d(1, 0, 0);
  };
  const double ns = cfg.noise_scale;
  Vector3d b_a = ns * cfg.init_ba * unit3();
  Vector3d b_w = ns * cfg.init_bw * unit3();
  for (long k = 0; k < ticks; ++k) {
    traj[k].b_a = b_a;
    traj[k].b_omega = b_w;
    b_a += ns * cfg.sigma_ba_walk * draw3();
    b_w += ns * cfg.sigma_bw_walk * draw3();
  }

  // Per-tick acceleration and angular-rate programs.  Every scenario starts
  // at rest over the origin with identity attitude.
  Vector3d p0(0, 0, 0.32);
  std::vector<Vector3d> accel(ticks, Vector3d::Zero());
  std::vector<Vector3d> omega(ticks, Vector3d::Zero());
  GaitTiming gait;
  std::vector<Vector3d> shoulders;
  std::vector<long> offsets;
  double lift = 0.0;

  switch (cfg.scenario) {
    case Scenario::Static: {
      shoulders = {{0.19, 0.13, 0}, {0.19, -0.13, 0}, {-0.19, 0.13, 0},
                   {-0.19, -0.13, 0}};
      break;
    }
    case Scenario::Hopper: {
      // Ballistic flight between stance pushes.  The push acceleration is
      // sized so the discrete velocity returns exactly to +v_up at liftoff,
      // making every hop periodic on the tick grid; the run starts at the
      // middle of a stance where the vertical velocity is exactly zero.
      gait = resolve_gait(cfg, 0.5, 0.4, /*even_stance=*/true);
      const long half = gait.stance / 2;
      const long flight = gait.period - gait.stance;
      const double v_up = 9.81 * (static_cast<double>(flight) * dt) / 2.0;
      const double a_up = v_up / (static_cast<double>(half) * dt);
      for (long k = 0; k < ticks; ++k) {
        const long ph = (k + half) % gait.period;
        const long hop = (k + half) / gait.period;
        if (ph < gait.stance) {
          accel[k] = {hop < 4 ? 0.5 : 0.0,
                      hop < 8 ? (hop % 2 ? -0.3 : 0.3) : 0.0, a_up};
        } else {
          accel[k] = {0.0, 0.0, -9.81};
        }
        const double t = static_cast<double>(k) * dt;
        omega[k] = {0.15 * std::sin(2 * M_PI * t / 1.7),
                    0.20 * std::sin(2 * M_PI * t / 1.3 + 0.5),
                    0.10 * std::sin(2 * M_PI * t / 3.1)};
      }
      shoulders = {{0.0, 0.0, 0.0}};
      offsets = {(gait.period - half) % gait.period};
      lift = 0.06;
      p0.z() = 0.30;
      break;
    }
    case Scenario::Trot: {
      // Smooth closed-form base velocity; accelerations are its exact
      // per-tick differences so the discrete integration reproduces it.
      gait = resolve_gait(cfg, 0.3, 0.5, /*even_stance=*/false);
      const double bob = 2.0 * M_PI /
                         (static_cast<double>(gait.period) * dt / 2.0);
      const auto vel_at = [bob](double t) -> Vector3d {
        const double ramp = smoothstep01(t / 2.0);
        return {0.45 * ramp, 0.04 * ramp * std::sin(2 * M_PI * t / 1.5),
                0.05 * ramp * std::sin(bob * t)};
      };
      for (long k = 0; k < ticks; ++k) {
        const double t = static_cast<double>(k) * dt;
        accel[k] = (vel_at(t + dt) - vel_at(t)) / dt;
        omega[k] = {0.05 * std::sin(2 * M_PI * t / 1.1),
                    0.06 * std::sin(2 * M_PI * t / 0.9 + 1.0),
                    0.10 * smoothstep01(t / 2.0)};
      }
      shoulders = {{0.19, 0.13, 0}, {0.19, -0.13, 0}, {-0.19, 0.13, 0},
                   {-0.19, -0.13, 0}};
      // Diagonal pairs: front-left/rear-right lead, the other pair is half
      // a period out of phase.
      offsets = {0, gait.period / 2, gait.period / 2, 0};
      lift = 0.04;
      break;
    }
  }

  // Integrate the base: constant acceleration across each tick, attitude by
  // the exponential of the held rate.
  std::vector<Vector3d> p(ticks), v(ticks);
  std::vector<UnitQuaternion> q(ticks);
  std::vector<Matrix3d> R(ticks);
  Vector3d pk = p0, vk = Vector3d::Zero();
  UnitQuaternion qk;
  for (long k = 0; k < ticks; ++k) {
    p[k] = pk;
    v[k] = vk;
    q[k] = qk;
    R[k] = quat_to_rot(qk);
    pk += vk * dt + 0.5 * accel[k] * dt * dt;
    vk += accel[k] * dt;
    qk = quat_mul(quat_exp(omega[k] * dt), qk).normalized();
  }

  // Feet: stance-gated footholds for gaited scenarios, fixed ground points
  // for the stand.
  std::vector<FootTrack> tracks(feet);
  for (int f = 0; f < feet; ++f) {
    if (cfg.scenario == Scenario::Static) {
      FootTrack fixed;
      Vector3d hold = p0 + shoulders[f];
      hold.z() = 0.0;
      fixed.pos.assign(ticks, hold);
      fixed.contact.assign(ticks, true);
      tracks[f] = std::move(fixed);
    } else {
      tracks[f] = plan_foot(p, R, shoulders[f], offsets[f], gait.stance,
                            gait.period, ticks, lift);
    }
  }

  for (long k = 0; k < ticks; ++k) {
    TrueState& s = traj[k];
    s.t = static_cast<double>(k) * dt;
    s.p = p[k];
    s.v = v[k];
    s.a = accel[k];
    s.q = q[k];
    s.omega = omega[k];
    s.p_foot.resize(feet);
    s.contact.resize(feet);
    for (int f = 0; f < feet; ++f) {
      s.p_foot[f] = tracks[f].pos[k];
      s.contact[f] = tracks[f].contact[k];
    }
  }
  return traj;
}

std::vector<SensorRecord> synthesize_sensors(const std::vector<TrueState>& traj,
                                             const SimConfig& cfg) {
  std::vector<SensorRecord> records;
  if (traj.empty()) return records;
  const long ticks = static_cast<long>(traj.size());
  const double dt = cfg.dt();
  const int feet = cfg.n_feet();
  records.reserve(static_cast<std::size_t>(ticks) * (3 + feet));

  // Independent noise stream so trajectory generation and measurement
  // corruption stay reproducible in isolation.
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto draw3 = [&]() -> Vector3d {
    const double x = n01(rng);
    const double y = n01(rng);
    const double z = n01(rng);
    return {x, y, z};
  };
  const double ns = cfg.noise_scale;

  for (long k = 0; k < ticks; ++k) {
    const TrueState& s = traj[k];
    const Matrix3d Rt = quat_to_rot(s.q).transpose();

    TruthRecord truth;
    truth.t = quantize9(s.t);
    truth.p = quantize9_vec(s.p);
    truth.v = quantize9_vec(s.v);
    truth.q = quantize9_quat(s.q);
    for (int f = 0; f < feet; ++f) {
      truth.p_foot.push_back(quantize9_vec(s.p_foot[f]));
    }
    truth.b_a = quantize9_vec(s.b_a);
    truth.b_omega = quantize9_vec(s.b_omega);
    records.emplace_back(std::move(truth));

    ContactRecord contact;
    contact.t = quantize9(s.t);
    contact.contact.assign(s.contact.begin(), s.contact.end());
    records.emplace_back(std::move(contact));

    // The IMU sample is drawn before the leg records are built because the
    // leg velocity term couples to the logged (quantized) gyro reading.
    ImuRecord imu;
    imu.t = quantize9(s.t);
    imu.accel = quantize9_vec(Rt * (s.a - gravity_world()) + s.b_a +
                              ns * cfg.sigma_accel * draw3());
    imu.gyro =
        quantize9_vec(s.omega + s.b_omega + ns * cfg.sigma_gyro * draw3());

    for (int f = 0; f < feet; ++f) {
      LoRecord lo;
      lo.t = quantize9(s.t);
      lo.foot = f;
      lo.fk = quantize9_vec(Rt * (s.p_foot[f] - s.p) +
                            ns * cfg.sigma_fk * draw3());
      if (s.contact[f]) {
        lo.has_jd = true;
        const Vector3d rel_vel = Rt * (-s.v);  // stance foot is stationary
        lo.jd = quantize9_vec(rel_vel - (imu.gyro - s.b_omega).cross(lo.fk) +
                              ns * cfg.sigma_jd * draw3());
      }
      records.emplace_back(std::move(lo));
    }
    records.emplace_back(std::move(imu));
  }

  // Camera stream: frames on the vo_rate grid, delivered vo_latency late.
  // Positions and attitudes at off-tick frame times come from the same
  // constant-acceleration / constant-rate interpolation the truth obeys.
  const double t_last = traj.back().t;
  const auto state_at = [&](double t, Vector3d& pos, UnitQuaternion& att) {
    long k = static_cast<long>(std::floor(t * cfg.imu_rate + 1e-9));
    k = std::clamp(k, 0L, ticks - 1);
    const double tau = std::max(0.0, t - static_cast<double>(k) * dt);
    const TrueState& s = traj[k];
    pos = s.p + s.v * tau + 0.5 * s.a * tau * tau;
    att = quat_mul(quat_exp(s.omega * tau), s.q).normalized();
  };

  Vector3d prev_pos;
  UnitQuaternion prev_att;
  bool have_prev = false;
  double prev_frame_t = 0.0;
  for (long j = 0;; ++j) {
    const double t_frame = static_cast<double>(j) / cfg.vo_rate;
    if (t_frame > t_last + 1e-12) break;
    Vector3d pos;
    UnitQuaternion att;
    state_at(t_frame, pos, att);

    VoAbsRecord abs;
    abs.t_arrival = quantize9(t_frame + cfg.vo_latency);
    abs.t_frame = quantize9(t_frame);
    abs.q = quantize9_quat(
        quat_mul(quat_exp(ns * cfg.sigma_vo_rot * draw3()), att));
    records.emplace_back(abs);

    if (have_prev) {
      VoIncRecord inc;
      inc.t_arrival = abs.t_arrival;
      inc.t_begin = quantize9(prev_frame_t);
      inc.t_end = abs.t_frame;
      inc.translation =
          quantize9_vec(quat_to_rot(prev_att).transpose() * (pos - prev_pos) +
                        ns * cfg.sigma_vo * draw3());
      records.emplace_back(inc);
    }
    prev_pos = pos;
    prev_att = att;
    prev_frame_t = t_frame;
    have_prev = true;
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const SensorRecord& a, const SensorRecord& b) {
                     const double ta = record_time(a), tb = record_time(b);
                     if (ta != tb) return ta < tb;
                     return a.index() < b.index();
                   });
  return records;
}

SensorLog simulate(const SimConfig& cfg) {
  SensorLog log;
  log.header.version = 1;
  log.header.scenario = scenario_name(cfg.scenario);
  log.header.n_feet = cfg.n_feet();
  log.header.imu_rate = cfg.imu_rate;
  log.header.vo_rate = cfg.vo_rate;
  log.header.vo_latency = cfg.vo_latency;
  log.header.duration = cfg.duration;
  log.header.seed = cfg.seed;
  log.records = synthesize_sensors(generate_trajectory(cfg), cfg);
  return log;
}

}  // namespace legest

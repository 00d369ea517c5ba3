#include "legest/sensor_log.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "legest/errors.hpp"

namespace legest {

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, " %.9f", v);
  out += buf;
}

void append_vec3(std::string& out, const Eigen::Vector3d& v) {
  append_num(out, v[0]);
  append_num(out, v[1]);
  append_num(out, v[2]);
}

void append_quat(std::string& out, const UnitQuaternion& q) {
  for (int i = 0; i < 4; ++i) append_num(out, q.xyzw[i]);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) toks.push_back(std::move(tok));
  return toks;
}

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw Error(ErrorCode::LogParse, "line " + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& tok, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
    parse_fail(line_no, "bad number '" + tok + "'");
  }
  return v;
}

long long parse_int(const std::string& tok, int line_no) {
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    parse_fail(line_no, "bad integer '" + tok + "'");
  }
  return v;
}

bool parse_bool(const std::string& tok, int line_no) {
  if (tok == "0") return false;
  if (tok == "1") return true;
  parse_fail(line_no, "bad flag '" + tok + "' (want 0 or 1)");
}

Eigen::Vector3d parse_vec3(const std::vector<std::string>& toks, int at,
                           int line_no) {
  return {parse_double(toks[at], line_no), parse_double(toks[at + 1], line_no),
          parse_double(toks[at + 2], line_no)};
}

UnitQuaternion parse_quat(const std::vector<std::string>& toks, int at,
                          int line_no) {
  return UnitQuaternion(
      parse_double(toks[at], line_no), parse_double(toks[at + 1], line_no),
      parse_double(toks[at + 2], line_no), parse_double(toks[at + 3], line_no));
}

void expect_tokens(const std::vector<std::string>& toks, int want,
                   int line_no) {
  if (static_cast<int>(toks.size()) != want) {
    parse_fail(line_no, "expected " + std::to_string(want) + " tokens, got " +
                            std::to_string(toks.size()));
  }
}

}  // namespace

double record_time(const SensorRecord& rec) {
  return std::visit(
      [](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, VoAbsRecord> ||
                      std::is_same_v<T, VoIncRecord>) {
          return r.t_arrival;
        } else {
          return r.t;
        }
      },
      rec);
}

double quantize9(double v) { return std::round(v * 1e9) / 1e9; }

std::string serialize_sensor_log(const SensorLog& log) {
  const LogHeader& h = log.header;
  std::string out;
  out.reserve(64 * log.records.size() + 256);

  out += "legest-log " + std::to_string(h.version) + "\n";
  out += "scenario " + h.scenario + "\n";
  out += "n_feet " + std::to_string(h.n_feet) + "\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "imu_rate %.9f\nvo_rate %.9f\n", h.imu_rate,
                h.vo_rate);
  out += buf;
  std::snprintf(buf, sizeof buf, "vo_latency %.9f\nduration %.9f\n",
                h.vo_latency, h.duration);
  out += buf;
  std::snprintf(buf, sizeof buf, "seed %" PRIu64 "\n", h.seed);
  out += buf;
  out += "end_header\n";

  for (const SensorRecord& rec : log.records) {
    std::visit(
        [&out](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, VoAbsRecord>) {
            out += "VO_ABS";
            append_num(out, r.t_arrival);
            append_num(out, r.t_frame);
            append_quat(out, r.q);
          } else if constexpr (std::is_same_v<T, VoIncRecord>) {
            out += "VO_INC";
            append_num(out, r.t_arrival);
            append_num(out, r.t_begin);
            append_num(out, r.t_end);
            append_vec3(out, r.translation);
          } else if constexpr (std::is_same_v<T, TruthRecord>) {
            out += "TRUTH";
            append_num(out, r.t);
            append_vec3(out, r.p);
            append_vec3(out, r.v);
            append_quat(out, r.q);
            for (const Eigen::Vector3d& f : r.p_foot) append_vec3(out, f);
            append_vec3(out, r.b_a);
            append_vec3(out, r.b_omega);
          } else if constexpr (std::is_same_v<T, ContactRecord>) {
            out += "CONTACT";
            append_num(out, r.t);
            for (const bool c : r.contact) out += c ? " 1" : " 0";
          } else if constexpr (std::is_same_v<T, LoRecord>) {
            out += "LO";
            append_num(out, r.t);
            out += " " + std::to_string(r.foot);
            append_vec3(out, r.fk);
            out += r.has_jd ? " 1" : " 0";
            append_vec3(out, r.jd);
          } else {
            out += "IMU";
            append_num(out, r.t);
            append_vec3(out, r.accel);
            append_vec3(out, r.gyro);
          }
        },
        rec);
    out += "\n";
  }
  return out;
}

void write_sensor_log(const std::string& path, const SensorLog& log) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
  f << serialize_sensor_log(log);
  f.close();
  if (f.fail()) throw Error(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

SensorLog read_sensor_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for reading");

  SensorLog log;
  LogHeader& h = log.header;
  std::string line;
  int line_no = 0;

  if (!std::getline(f, line)) parse_fail(1, "empty file");
  ++line_no;
  {
    const auto toks = split_ws(line);
    expect_tokens(toks, 2, line_no);
    if (toks[0] != "legest-log") parse_fail(line_no, "not a legest log");
    h.version = static_cast<int>(parse_int(toks[1], line_no));
    if (h.version != 1) {
      parse_fail(line_no, "unsupported version " + toks[1]);
    }
  }

  bool header_done = false;
  while (!header_done) {
    if (!std::getline(f, line)) parse_fail(line_no + 1, "header not terminated");
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "end_header") {
      expect_tokens(toks, 1, line_no);
      header_done = true;
    } else if (toks[0] == "scenario") {
      expect_tokens(toks, 2, line_no);
      h.scenario = toks[1];
    } else if (toks[0] == "n_feet") {
      expect_tokens(toks, 2, line_no);
      h.n_feet = static_cast<int>(parse_int(toks[1], line_no));
      if (h.n_feet < 0) parse_fail(line_no, "negative n_feet");
    } else if (toks[0] == "imu_rate") {
      expect_tokens(toks, 2, line_no);
      h.imu_rate = parse_double(toks[1], line_no);
    } else if (toks[0] == "vo_rate") {
      expect_tokens(toks, 2, line_no);
      h.vo_rate = parse_double(toks[1], line_no);
    } else if (toks[0] == "vo_latency") {
      expect_tokens(toks, 2, line_no);
      h.vo_latency = parse_double(toks[1], line_no);
    } else if (toks[0] == "duration") {
      expect_tokens(toks, 2, line_no);
      h.duration = parse_double(toks[1], line_no);
    } else if (toks[0] == "seed") {
      expect_tokens(toks, 2, line_no);
      char* end = nullptr;
      h.seed = std::strtoull(toks[1].c_str(), &end, 10);
      // strtoull wraps negative input around instead of failing; reject it.
      if (end == toks[1].c_str() || *end != '\0' || toks[1][0] == '-') {
        parse_fail(line_no, "bad seed '" + toks[1] + "'");
      }
    } else {
      parse_fail(line_no, "unknown header key '" + toks[0] + "'");
    }
  }

  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    SensorRecord rec;
    if (toks[0] == "VO_ABS") {
      expect_tokens(toks, 7, line_no);
      VoAbsRecord r;
      r.t_arrival = parse_double(toks[1], line_no);
      r.t_frame = parse_double(toks[2], line_no);
      r.q = parse_quat(toks, 3, line_no);
      rec = r;
    } else if (toks[0] == "VO_INC") {
      expect_tokens(toks, 7, line_no);
      VoIncRecord r;
      r.t_arrival = parse_double(toks[1], line_no);
      r.t_begin = parse_double(toks[2], line_no);
      r.t_end = parse_double(toks[3], line_no);
      r.translation = parse_vec3(toks, 4, line_no);
      rec = r;
    } else if (toks[0] == "TRUTH") {
      expect_tokens(toks, 18 + 3 * h.n_feet, line_no);
      TruthRecord r;
      r.t = parse_double(toks[1], line_no);
      r.p = parse_vec3(toks, 2, line_no);
      r.v = parse_vec3(toks, 5, line_no);
      r.q = parse_quat(toks, 8, line_no);
      for (int ft = 0; ft < h.n_feet; ++ft) {
        r.p_foot.push_back(parse_vec3(toks, 12 + 3 * ft, line_no));
      }
      r.b_a = parse_vec3(toks, 12 + 3 * h.n_feet, line_no);
      r.b_omega = parse_vec3(toks, 15 + 3 * h.n_feet, line_no);
      rec = r;
    } else if (toks[0] == "CONTACT") {
      expect_tokens(toks, 2 + h.n_feet, line_no);
      ContactRecord r;
      r.t = parse_double(toks[1], line_no);
      for (int ft = 0; ft < h.n_feet; ++ft) {
        r.contact.push_back(parse_bool(toks[2 + ft], line_no));
      }
      rec = r;
    } else if (toks[0] == "LO") {
      expect_tokens(toks, 10, line_no);
      LoRecord r;
      r.t = parse_double(toks[1], line_no);
      r.foot = static_cast<int>(parse_int(toks[2], line_no));
      if (r.foot < 0 || r.foot >= h.n_feet) {
        parse_fail(line_no, "foot index out of range");
      }
      r.fk = parse_vec3(toks, 3, line_no);
      r.has_jd = parse_bool(toks[6], line_no);
      r.jd = parse_vec3(toks, 7, line_no);
      rec = r;
    } else if (toks[0] == "IMU") {
      expect_tokens(toks, 8, line_no);
      ImuRecord r;
      r.t = parse_double(toks[1], line_no);
      r.accel = parse_vec3(toks, 2, line_no);
      r.gyro = parse_vec3(toks, 5, line_no);
      rec = r;
    } else {
      parse_fail(line_no, "unknown record tag '" + toks[0] + "'");
    }
    const double t = record_time(rec);
    if (t < prev_t) parse_fail(line_no, "out-of-order record");
    prev_t = t;
    log.records.push_back(std::move(rec));
  }
  return log;
}

}  // namespace legest

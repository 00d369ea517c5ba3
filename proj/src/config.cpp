#include "legest/config.hpp"

#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "legest/errors.hpp"

namespace legest {

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw Error(ErrorCode::ConfigParse,
              "line " + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& tok, int line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty() || errno == ERANGE ||
      !std::isfinite(v)) {
    parse_fail(line_no, "expected a finite number, got '" + tok + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& tok, int line_no) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  // strtoull wraps negative input around instead of failing; reject it.
  if (end != tok.c_str() + tok.size() || tok.empty() || tok[0] == '-' ||
      errno == ERANGE) {
    parse_fail(line_no, "expected an unsigned integer, got '" + tok + "'");
  }
  return static_cast<std::uint64_t>(v);
}

int parse_positive_int(const std::string& tok, int line_no) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || tok.empty() || errno == ERANGE ||
      v < 1 || v > 1000000) {
    parse_fail(line_no, "expected a positive integer, got '" + tok + "'");
  }
  return static_cast<int>(v);
}

// One `key = v1 [v2 ...]` assignment with its source line number.
struct Assignment {
  int line_no = 0;
  std::string key;
  std::vector<std::string> values;
};

std::vector<Assignment> tokenize(const std::string& text) {
  std::vector<Assignment> out;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& c : line) {
      if (c == ',' || c == '\t' || c == '\r') c = ' ';
    }
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() < 3 || tokens[1] != "=") {
      parse_fail(line_no, "expected 'key = value...'");
    }
    Assignment a;
    a.line_no = line_no;
    a.key = tokens[0];
    a.values.assign(tokens.begin() + 2, tokens.end());
    out.push_back(std::move(a));
  }
  return out;
}

std::string single_value(const Assignment& a) {
  if (a.values.size() != 1) {
    parse_fail(a.line_no, "key '" + a.key + "' takes exactly one value");
  }
  return a.values[0];
}

// Covariance in one of three shapes: isotropic variance, diagonal, or full
// row-major matrix.
Eigen::Matrix3d parse_covariance(const Assignment& a) {
  std::vector<double> v;
  for (const auto& tok : a.values) v.push_back(parse_double(tok, a.line_no));
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  if (v.size() == 1) {
    if (v[0] <= 0.0) parse_fail(a.line_no, "variance must be positive");
    m = v[0] * Eigen::Matrix3d::Identity();
  } else if (v.size() == 3) {
    for (double d : v) {
      if (d <= 0.0) parse_fail(a.line_no, "variances must be positive");
    }
    m.diagonal() << v[0], v[1], v[2];
  } else if (v.size() == 9) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
    }
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
      parse_fail(a.line_no, "covariance matrix must be symmetric");
    }
  } else {
    parse_fail(a.line_no,
               "covariance takes 1 (isotropic), 3 (diagonal), or 9 "
               "(row-major) values");
  }
  return m;
}

double parse_nonneg(const Assignment& a) {
  const double v = parse_double(single_value(a), a.line_no);
  if (v < 0.0) parse_fail(a.line_no, "value must be non-negative");
  return v;
}

double parse_positive(const Assignment& a) {
  const double v = parse_double(single_value(a), a.line_no);
  if (v <= 0.0) parse_fail(a.line_no, "value must be positive");
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for read");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::IoFailure, "read error on '" + path + "'");
  }
  return buf.str();
}

}  // namespace

bool parse_lo_policy(const std::string& name, LoPolicy& out) {
  if (name == "position") {
    out = LoPolicy::PositionOnly;
  } else if (name == "velocity") {
    out = LoPolicy::VelocityOnly;
  } else if (name == "both") {
    out = LoPolicy::PositionAndVelocity;
  } else {
    return false;
  }
  return true;
}

NoiseConfig parse_noise_config(const std::string& text) {
  NoiseConfig cfg;
  for (const Assignment& a : tokenize(text)) {
    if (a.key == "q_a") {
      cfg.Q_a = parse_covariance(a);
    } else if (a.key == "q_w") {
      cfg.Q_w = parse_covariance(a);
    } else if (a.key == "q_ba") {
      cfg.Q_ba = parse_covariance(a);
    } else if (a.key == "q_bw") {
      cfg.Q_bw = parse_covariance(a);
    } else if (a.key == "q_p") {
      cfg.Q_p = parse_covariance(a);
    } else if (a.key == "q_foot") {
      cfg.Q_foot = parse_covariance(a);
    } else if (a.key == "q_pf") {
      cfg.Q_pf = parse_covariance(a);
    } else if (a.key == "q_vf") {
      cfg.Q_vf = parse_covariance(a);
    } else if (a.key == "q_slip") {
      cfg.Q_slip = parse_covariance(a);
    } else if (a.key == "q_vo") {
      cfg.Q_vo = parse_covariance(a);
    } else if (a.key == "q_yqc") {
      cfg.Q_yqc = parse_covariance(a);
    } else if (a.key == "window_size") {
      cfg.window_size = parse_positive_int(single_value(a), a.line_no);
    } else if (a.key == "rate") {
      cfg.rate = parse_positive(a);
    } else if (a.key == "lo_policy") {
      if (!parse_lo_policy(single_value(a), cfg.lo_policy)) {
        parse_fail(a.line_no,
                   "lo_policy must be 'position', 'velocity', or 'both'");
      }
    } else {
      parse_fail(a.line_no, "unknown key '" + a.key + "'");
    }
  }
  return cfg;
}

SimConfig parse_sim_config(const std::string& text) {
  SimConfig cfg;
  for (const Assignment& a : tokenize(text)) {
    if (a.key == "scenario") {
      if (!parse_scenario(single_value(a), cfg.scenario)) {
        parse_fail(a.line_no,
                   "scenario must be 'static', 'hopper', or 'trot'");
      }
    } else if (a.key == "duration") {
      cfg.duration = parse_nonneg(a);
    } else if (a.key == "imu_rate") {
      cfg.imu_rate = parse_positive(a);
    } else if (a.key == "vo_rate") {
      cfg.vo_rate = parse_positive(a);
    } else if (a.key == "vo_latency") {
      cfg.vo_latency = parse_nonneg(a);
    } else if (a.key == "seed") {
      cfg.seed = parse_u64(single_value(a), a.line_no);
    } else if (a.key == "gait_period") {
      cfg.gait_period = parse_nonneg(a);
    } else if (a.key == "duty_factor") {
      cfg.duty_factor = parse_nonneg(a);
      if (cfg.duty_factor >= 1.0) {
        parse_fail(a.line_no, "duty_factor must be below 1");
      }
    } else if (a.key == "noise_scale") {
      cfg.noise_scale = parse_nonneg(a);
    } else if (a.key == "sigma_accel") {
      cfg.sigma_accel = parse_nonneg(a);
    } else if (a.key == "sigma_gyro") {
      cfg.sigma_gyro = parse_nonneg(a);
    } else if (a.key == "sigma_ba_walk") {
      cfg.sigma_ba_walk = parse_nonneg(a);
    } else if (a.key == "sigma_bw_walk") {
      cfg.sigma_bw_walk = parse_nonneg(a);
    } else if (a.key == "sigma_fk") {
      cfg.sigma_fk = parse_nonneg(a);
    } else if (a.key == "sigma_jd") {
      cfg.sigma_jd = parse_nonneg(a);
    } else if (a.key == "sigma_vo") {
      cfg.sigma_vo = parse_nonneg(a);
    } else if (a.key == "sigma_vo_rot") {
      cfg.sigma_vo_rot = parse_nonneg(a);
    } else if (a.key == "init_ba") {
      cfg.init_ba = parse_nonneg(a);
    } else if (a.key == "init_bw") {
      cfg.init_bw = parse_nonneg(a);
    } else {
      parse_fail(a.line_no, "unknown key '" + a.key + "'");
    }
  }
  return cfg;
}

namespace {

template <typename Parser>
auto load_config(const std::string& path, Parser parse) {
  const std::string text = read_text_file(path);
  try {
    return parse(text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConfigParse) throw;
    // Re-raise with the file path prepended to the line-numbered detail,
    // which sits after the "ConfigParse: " prefix what() carries.
    std::string detail = e.what();
    const std::string prefix =
        std::string(error_code_name(ErrorCode::ConfigParse)) + ": ";
    if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
    throw Error(ErrorCode::ConfigParse, path + ": " + detail);
  }
}

}  // namespace

NoiseConfig load_noise_config(const std::string& path) {
  return load_config(path, parse_noise_config);
}

SimConfig load_sim_config(const std::string& path) {
  return load_config(path, parse_sim_config);
}

}  // namespace legest

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "legest/config.hpp"
#include "legest/errors.hpp"
#include "legest/fif.hpp"
#include "legest/metrics.hpp"
#include "legest/pipeline.hpp"
#include "legest/sensor_log.hpp"
#include "legest/sim.hpp"

namespace {

using namespace legest;

// Shared estimate/sweep/compare flags: which log, which tuning, and the
// overrides that map onto PipelineOptions.
struct EstimateArgs {
  std::string log_path;
  std::string config_path;
  int window = 0;  // 0 = keep config value
  bool no_vo = false;
  std::string lo_form;
  bool timing = false;
};

void add_estimate_flags(CLI::App* cmd, EstimateArgs& args) {
  cmd->add_option("--log", args.log_path, "sensor log to estimate over")
      ->required();
  cmd->add_option("--config", args.config_path,
                  "estimator config file (defaults when omitted)");
  cmd->add_option("--window", args.window, "override the window size N")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-vo", args.no_vo,
                "drop all camera records (orientation and translation)");
  cmd->add_option("--lo-form", args.lo_form,
                  "leg-odometry measurement form: position or velocity")
      ->check(CLI::IsMember({"position", "velocity"}));
  cmd->add_flag("--timing", args.timing,
                "report wall-clock solve times (non-deterministic output)");
}

PipelineOptions make_pipeline_options(const EstimateArgs& args) {
  PipelineOptions opt;
  if (!args.config_path.empty()) {
    opt.noise = load_noise_config(args.config_path);
  }
  if (args.window > 0) opt.noise.window_size = args.window;
  if (!args.lo_form.empty()) parse_lo_policy(args.lo_form, opt.noise.lo_policy);
  opt.use_vo = !args.no_vo;
  return opt;
}

void append_value(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  out += buf;
}

// Per-tick estimate table: fixed 1e-9 precision, one row per IMU tick.
std::string format_trace_csv(const PipelineResult& res) {
  std::string out = "tick,t,px,py,pz,vx,vy,vz,qx,qy,qz,qw,bax,bay,baz,bwx,bwy,bwz";
  for (int f = 0; f < res.n_feet; ++f) {
    const std::string n = std::to_string(f);
    out += ",foot" + n + "x,foot" + n + "y,foot" + n + "z";
  }
  out += "\n";
  for (const TraceRow& row : res.trace) {
    out += std::to_string(row.tick);
    std::vector<double> cols;
    cols.push_back(row.t);
    for (int i = 0; i < 3; ++i) cols.push_back(row.state.p[i]);
    for (int i = 0; i < 3; ++i) cols.push_back(row.state.v[i]);
    for (int i = 0; i < 4; ++i) cols.push_back(row.q.xyzw[i]);
    for (int i = 0; i < 3; ++i) cols.push_back(row.state.b_a[i]);
    for (int i = 0; i < 3; ++i) cols.push_back(row.b_omega[i]);
    for (int f = 0; f < res.n_feet; ++f) {
      for (int i = 0; i < 3; ++i) cols.push_back(row.state.p_foot[f][i]);
    }
    for (double c : cols) {
      out += ',';
      append_value(out, c);
    }
    out += "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for write");
  }
  out << content;
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write failed on '" + path + "'");
  }
}

void print_metrics(const MetricsReport& m, bool timing) {
  std::printf("ticks=%zu\n", m.n_ticks);
  std::printf("rmse_v_body=%.12e\n", m.rmse_v_body);
  std::printf("rmse_roll_pitch=%.12e\n", m.rmse_roll_pitch);
  std::printf("rmse_yaw=%.12e\n", m.rmse_yaw);
  std::printf("rmse_height=%.12e\n", m.rmse_height);
  std::printf("rmse_orientation=%.12e\n", m.rmse_orientation);
  std::printf("max_orientation=%.12e\n", m.max_orientation);
  if (timing) {
    std::printf("solve_mean_us=%.3f\n", m.solve_mean_us);
    std::printf("solve_p99_us=%.3f\n", m.solve_p99_us);
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const std::optional<std::uint64_t>& seed) {
  SimConfig cfg;
  if (!config_path.empty()) cfg = load_sim_config(config_path);
  if (seed) cfg.seed = *seed;
  const SensorLog log = simulate(cfg);
  write_sensor_log(out_path, log);
  std::printf("scenario=%s\n", log.header.scenario.c_str());
  std::printf("records=%zu\n", log.records.size());
  std::printf("seed=%llu\n", static_cast<unsigned long long>(cfg.seed));
  return 0;
}

int cmd_estimate(const EstimateArgs& args, const std::string& out_path) {
  const SensorLog log = read_sensor_log(args.log_path);
  const PipelineResult res = run_pipeline(log, make_pipeline_options(args));
  if (!out_path.empty()) write_text_file(out_path, format_trace_csv(res));
  if (res.has_aligned_truth()) {
    print_metrics(compute_metrics(res.trace, res.truth), args.timing);
  } else {
    std::printf("ticks=%zu\n", res.trace.size());
    if (args.timing && !res.trace.empty()) {
      double sum = 0.0;
      for (const TraceRow& r : res.trace) sum += r.solve_us;
      std::printf("solve_mean_us=%.3f\n",
                  sum / static_cast<double>(res.trace.size()));
    }
  }
  return 0;
}

int cmd_sweep_window(const EstimateArgs& args, const std::string& out_path,
                     std::vector<int> sizes) {
  if (sizes.empty()) sizes = {1, 5, 10, 20};
  for (int n : sizes) {
    if (n < 1) {
      throw Error(ErrorCode::ConfigParse,
                  "window sizes must be >= 1, got " + std::to_string(n));
    }
  }
  const SensorLog log = read_sensor_log(args.log_path);

  std::string table =
      args.timing ? "N,rmse_v_body,solve_mean_us\n" : "N,rmse_v_body\n";
  for (int n : sizes) {
    EstimateArgs run = args;
    run.window = n;
    const PipelineResult res = run_pipeline(log, make_pipeline_options(run));
    if (!res.has_aligned_truth()) {
      throw Error(ErrorCode::LogParse,
                  "sweep-window needs ground truth in the log");
    }
    const MetricsReport m = compute_metrics(res.trace, res.truth);
    char buf[128];
    if (args.timing) {
      std::snprintf(buf, sizeof(buf), "%d,%.12e,%.3f\n", n, m.rmse_v_body,
                    m.solve_mean_us);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.12e\n", n, m.rmse_v_body);
    }
    table += buf;
  }
  std::fputs(table.c_str(), stdout);
  if (!out_path.empty()) write_text_file(out_path, table);
  return 0;
}

int cmd_compare_fif(const EstimateArgs& args) {
  const SensorLog log = read_sensor_log(args.log_path);
  long imu_ticks = 0;
  for (const auto& r : log.records) {
    if (std::holds_alternative<ImuRecord>(r)) ++imu_ticks;
  }
  if (imu_ticks > 1000) {
    std::fprintf(stderr,
                 "error: LogTooLong: compare-fif accepts at most 1000 ticks, "
                 "log has %ld\n",
                 imu_ticks);
    return 1;
  }

  // Checkpoint spacing: ~20 full-information solves across the log plus the
  // final tick.
  const long stride = std::max<long>(1, imu_ticks / 20);
  double max_rel = 0.0;
  long checkpoints = 0;

  PipelineOptions opt = make_pipeline_options(args);
  opt.on_tick = [&](const MheEstimator& est, const TraceRow& row) {
    if (row.tick % stride != 0 && row.tick != imu_ticks - 1) return;
    // Batch problem over exactly the information the window has consumed.
    FifProblem problem{est.history(),
                       MheState::from_vector(est.core().prior_mean(),
                                             est.n_feet()),
                       est.core().prior_cov(), est.n_feet(), est.config()};
    const FifResult fif = solve_fif(problem);
    const Eigen::VectorXd x_fif =
        fif_mhe_state(fif, row.tick, est.n_feet()).to_vector();
    const Eigen::VectorXd x_mhe = row.state.to_vector();
    const double rel = (x_mhe - x_fif).cwiseAbs().maxCoeff() /
                       (1.0 + x_fif.cwiseAbs().maxCoeff());
    max_rel = std::max(max_rel, rel);
    ++checkpoints;
  };
  run_pipeline(log, opt);

  std::printf("checkpoints=%ld\n", checkpoints);
  std::printf("max_rel_deviation=%.12e\n", max_rel);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoupled legged-robot state estimation: orientation filter "
               "plus sliding-window linear MHE with exact arrival cost"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  CLI::App* sim = app.add_subcommand(
      "simulate", "generate a deterministic sensor log from a scenario");
  sim->add_option("--config", sim_config,
                  "simulation config file (defaults when omitted)");
  sim->add_option("--out", sim_out, "output log path")->required();
  sim->add_option("--seed", sim_seed, "override the config seed");

  // estimate
  EstimateArgs est_args;
  std::string est_out;
  CLI::App* est = app.add_subcommand(
      "estimate", "run the estimator over a log and report error metrics");
  add_estimate_flags(est, est_args);
  est->add_option("--out", est_out, "write the per-tick estimate table here");

  // sweep-window
  EstimateArgs sweep_args;
  std::string sweep_out;
  std::vector<int> sweep_sizes;
  CLI::App* sweep = app.add_subcommand(
      "sweep-window", "estimate repeatedly across window sizes");
  add_estimate_flags(sweep, sweep_args);
  sweep->add_option("--sizes", sweep_sizes,
                    "comma-separated window sizes (default 1,5,10,20)")
      ->delimiter(',');
  sweep->add_option("--out", sweep_out, "also write the table to this file");

  // compare-fif
  EstimateArgs cmp_args;
  CLI::App* cmp = app.add_subcommand(
      "compare-fif",
      "check the sliding window against the full-information solution");
  add_estimate_flags(cmp, cmp_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
    if (est->parsed()) return cmd_estimate(est_args, est_out);
    if (sweep->parsed()) return cmd_sweep_window(sweep_args, sweep_out, sweep_sizes);
    if (cmp->parsed()) return cmd_compare_fif(cmp_args);
  } catch (const legest::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 1;
  }
  return 0;
}

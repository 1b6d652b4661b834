#ifndef AHRS_CLI_COMMANDS_HPP_
#define AHRS_CLI_COMMANDS_HPP_

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "ahrs/cli/config.hpp"
#include "ahrs/cli/csv.hpp"
#include "ahrs/cli/report.hpp"
#include "ahrs/error.hpp"
#include "ahrs/filters/filter_bank.hpp"
#include "ahrs/metrics.hpp"
#include "ahrs/riccati.hpp"
#include "ahrs/sim.hpp"

namespace ahrs::cli {

enum ExitCode : int { kOk = 0, kPropertyFailure = 1, kConfigError = 2, kNumericalError = 3 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonFiniteState:
    case ErrorKind::SingularInnovation:
    case ErrorKind::DegenerateGeometry:
    case ErrorKind::EmptyWindow:
      return kNumericalError;
    default:
      return kConfigError;
  }
}

// ---------------------------------------------------------------- tune

inline riccati::TuneReport run_tune(const RunConfig& cfg) {
  std::vector<double> w = cfg.omega_max;
  if (w.empty() && cfg.trajectory) w.push_back(cfg.trajectory->omega_max());
  return riccati::tune(cfg.noise, cfg.mask, w, cfg.convention, cfg.tol, cfg.max_iter);
}

// ---------------------------------------------------------------- gains

/// Gain set for the configured filters: inline K, then a gains file, then
/// the DARE. RINCF2 parameters come from the config, the gains file, or a
/// DARE re-solve at omega_max (first listed, else the trajectory's, else pi/3).
inline filters::FilterGains resolve_gains(const RunConfig& cfg) {
  bool need_K = false, need_p = false;
  for (auto k : cfg.filters) {
    need_K = need_K || k == filters::FilterKind::RINCF || k == filters::FilterKind::RINCF2;
    need_p = need_p || k == filters::FilterKind::RINCF2;
  }
  filters::FilterGains g;
  g.ncf = cfg.ncf;
  g.wahba = cfg.wahba;
  std::optional<LoadedGains> file;
  if (!cfg.gains_file.empty() && !cfg.K_inline) file = load_gains_json(cfg.gains_file);
  if (need_K) {
    Mat6 K;
    if (cfg.K_inline) K = *cfg.K_inline;
    else if (file) K = file->K;
    else K = riccati::solve_dare(riccati::build_discrete_system(cfg.noise), cfg.tol, cfg.max_iter).K;
    g.K = riccati::GainMatrix{K, cfg.mask};
  }
  if (need_p) {
    if (cfg.rincf2) g.rincf2 = cfg.rincf2;
    else if (file && file->rincf2) g.rincf2 = file->rincf2;
    else {
      double w = std::numbers::pi / 3;
      if (!cfg.omega_max.empty()) w = cfg.omega_max.front();
      else if (cfg.trajectory) w = cfg.trajectory->omega_max();
      g.rincf2 = riccati::compute_rincf2_params(cfg.noise, w, cfg.convention, cfg.tol, cfg.max_iter);
    }
  }
  return g;
}

// ---------------------------------------------------------------- logs

inline Log load_or_simulate(const RunConfig& cfg) {
  if (!cfg.input.empty()) {
    std::ifstream f(cfg.input);
    if (!f) throw Error(ErrorKind::InvalidConfig, "cannot open input log '" + cfg.input + "'");
    Log log = read_log(f);
    if (log.samples.empty()) throw Error(ErrorKind::Parse, "input log has no samples");
    return log;
  }
  if (!cfg.trajectory) throw Error(ErrorKind::InvalidConfig, "need an input log or a trajectory case");
  return log_from_sim(sim::simulate(*cfg.trajectory, cfg.sim_run()));
}

// ---------------------------------------------------------------- run

struct FilterRun {
  filters::FilterKind kind;
  std::vector<filters::StepOutput> outputs;
  metrics::GainTrace gains;
  std::optional<metrics::ErrorSeries> errors;  // when the log carries truth
};

inline filters::Filter make_filter(filters::FilterKind kind, const RunConfig& cfg, const filters::FilterGains& g,
                                   const Log& log) {
  filters::Filter f(kind, cfg.noise, g);
  if (cfg.perfect_init) {
    if (!log.has_truth()) throw Error(ErrorKind::InvalidConfig, "perfect init needs truth columns in the log");
    f.reset({log.truth.front().q, log.truth.front().bias}, log.samples.front().t);
  }
  return f;
}

/// Runs one filter over the log. Sample 0 reports the initial state; each
/// later sample steps by the time since the previous one.
inline FilterRun run_filter(filters::FilterKind kind, const RunConfig& cfg, const filters::FilterGains& g,
                            const Log& log) {
  filters::Filter f = make_filter(kind, cfg, g, log);
  FilterRun r{kind, {}, {}, std::nullopt};
  r.outputs.reserve(log.samples.size());
  if (log.has_truth()) r.errors.emplace();
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    const ImuSample& s = log.samples[i];
    filters::StepOutput o = i == 0 ? f.current(s) : f.step(s, s.t - log.samples[i - 1].t);
    if (o.gain) r.gains.record(static_cast<long>(i), s.t, *o.gain);
    if (r.errors) r.errors->push(s.t, metrics::attitude_error(log.truth[i].q, o.x_hat.q));
    r.outputs.push_back(std::move(o));
  }
  return r;
}

inline void write_estimates(std::ostream& out, const FilterRun& r, const Log& log) {
  CsvWriter w(out);
  std::string h = "t,qw,qx,qy,qz,roll,pitch,yaw,bwx,bwy,bwz,egx,egy,egz,ebx,eby,ebz";
  if (r.errors) h += ",err_roll,err_pitch,err_yaw,err_angle";
  w.header(h);
  for (std::size_t i = 0; i < r.outputs.size(); ++i) {
    const auto& o = r.outputs[i];
    w.field(log.samples[i].t).field(o.x_hat.q.a).field(o.x_hat.q.b).field(o.x_hat.q.c).field(o.x_hat.q.d);
    w.field(o.euler.roll).field(o.euler.pitch).field(o.euler.yaw).fields(o.x_hat.omega_b);
    w.fields(o.error.e_g).fields(o.error.e_b);
    if (r.errors)
      w.field(r.errors->roll[i]).field(r.errors->pitch[i]).field(r.errors->yaw[i]).field(r.errors->angle[i]);
    w.end_row();
  }
}

inline void write_gain_trace(std::ostream& out, const metrics::GainTrace& tr) {
  CsvWriter w(out);
  std::string h = "t";
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= 6; ++j) h += ",K" + std::to_string(i) + std::to_string(j);
  w.header(h);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    w.field(tr.t[k]);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) w.field(tr.K[k](i, j));
    w.end_row();
  }
}

// ---------------------------------------------------------------- compare

struct CompareRow {
  filters::FilterKind kind;
  metrics::SummaryStats stats;
  double median_step_us = 0.0;
};

inline constexpr int kTimingWarmup = 1000;
inline constexpr int kTimingSteps = 10000;

/// Median wall time of one step, cycling over the log as often as needed.
inline double median_step_time_us(filters::FilterKind kind, const RunConfig& cfg, const filters::FilterGains& g,
                                  const Log& log, int warmup = kTimingWarmup, int steps = kTimingSteps) {
  filters::Filter f = make_filter(kind, cfg, g, log);
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(steps));
  const std::size_t n = log.samples.size();
  std::size_t i = 0;
  for (int k = 0; k < warmup + steps; ++k) {
    i = (i + 1) % n;
    const double dt = i == 0 ? cfg.noise.dt : log.samples[i].t - log.samples[i - 1].t;
    const auto t0 = std::chrono::steady_clock::now();
    const filters::StepOutput o = f.step(log.samples[i], dt);
    const auto t1 = std::chrono::steady_clock::now();
    if (!o.x_hat.q.is_finite()) throw Error(ErrorKind::NonFiniteState, "timing run diverged");
    if (k >= warmup) times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
  return times[times.size() / 2];
}

inline std::vector<CompareRow> compare_filters(const RunConfig& cfg, const Log& log, bool timing = true) {
  if (cfg.filters.size() < 2) throw Error(ErrorKind::InvalidConfig, "compare needs at least two filters");
  if (!log.has_truth()) throw Error(ErrorKind::InvalidConfig, "compare needs truth columns in the log");
  const filters::FilterGains g = resolve_gains(cfg);
  std::vector<CompareRow> rows;
  for (auto kind : cfg.filters) {
    const FilterRun r = run_filter(kind, cfg, g, log);
    CompareRow row{kind, metrics::summarize(*r.errors, cfg.window), 0.0};
    if (timing) row.median_step_us = median_step_time_us(kind, cfg, g, log);
    rows.push_back(row);
  }
  return rows;
}

inline void write_compare_table(std::ostream& out, const std::vector<CompareRow>& rows) {
  constexpr double deg = 180.0 / std::numbers::pi;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %17s %17s %17s %10s %9s\n", "filter", "roll mean/std", "pitch mean/std",
                "yaw mean/std", "angle rms", "step us");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-8s %8.3f/%-8.3f %8.3f/%-8.3f %8.3f/%-8.3f %10.4f %9.3f\n",
                  filters::to_string(r.kind).c_str(), r.stats.mean[0] * deg, r.stats.std[0] * deg,
                  r.stats.mean[1] * deg, r.stats.std[1] * deg, r.stats.mean[2] * deg, r.stats.std[2] * deg,
                  r.stats.rms[3] * deg, r.median_step_us);
    out << buf;
  }
  if (!rows.empty()) {
    std::snprintf(buf, sizeof buf, "(degrees, samples with t >= %.3g s)\n", rows.front().stats.window_start);
    out << buf;
  }
}

inline void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "filter,roll_mean,roll_std,pitch_mean,pitch_std,yaw_mean,yaw_std,angle_mean,angle_std,angle_rms,"
         "step_us\n";
  for (const auto& r : rows) {
    out << filters::to_string(r.kind);
    for (int c = 0; c < 4; ++c) out << ',' << format_double(r.stats.mean[c]) << ',' << format_double(r.stats.std[c]);
    out << ',' << format_double(r.stats.rms[3]) << ',' << format_double(r.median_step_us) << '\n';
  }
}

}  // namespace ahrs::cli

#endif  // AHRS_CLI_COMMANDS_HPP_

// ahrs: gain tuning, simulation, filter runs and comparisons from the shell.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ahrs/cli/commands.hpp"
#include "ahrs/cli/config.hpp"
#include "ahrs/cli/csv.hpp"
#include "ahrs/cli/report.hpp"
#include "ahrs/cli/selftest.hpp"

namespace {

using namespace ahrs;
using namespace ahrs::cli;

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string seed;
  std::string trajectory;
  std::string duration, dt;
  std::string input, output;
  std::string filters;
  std::string mask;
  std::string omega_max;
  std::string gains;
  std::string window;
  std::string convention;
  bool perfect_init = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "key = value configuration file");
  cmd->add_option("--set", f.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", f.seed, "random seed (overrides AHRS_SEED)");
  cmd->add_option("--case", f.trajectory, "trajectory case 1, 2 or 3");
  cmd->add_option("--duration", f.duration, "simulated duration (s)");
  cmd->add_option("--dt", f.dt, "sample period (s)");
  cmd->add_option("-i,--input", f.input, "input log CSV");
  cmd->add_option("-o,--output", f.output, "output file (default stdout)");
  cmd->add_option("-f,--filter,--filters", f.filters, "filter name or comma list");
  cmd->add_option("--mask", f.mask, "zeroed gain entries, row:col list or 'selective'");
  cmd->add_option("--omega-max", f.omega_max, "omega_max list for RINCF2 parameters (rad/s)");
  cmd->add_option("--gains", f.gains, "gain report JSON from `tune`");
  cmd->add_option("--window", f.window, "statistics start time (s)");
  cmd->add_option("--index-convention", f.convention, "rowcol or colrow");
  cmd->add_flag("--perfect-init", f.perfect_init, "initialize filters at the truth (testing)");
}

RunConfig build_config(const CommonFlags& f) {
  RunConfig cfg = load_config(f.config);
  if (const char* env = std::getenv("AHRS_SEED"); env && *env) apply_setting(cfg, "seed", env);
  for (const auto& kv : f.overrides) apply_override(cfg, kv);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) apply_setting(cfg, key, v);
  };
  set("seed", f.seed);
  set("case", f.trajectory);
  set("duration", f.duration);
  set("dt", f.dt);
  set("input", f.input);
  set("output", f.output);
  set("filters", f.filters);
  set("mask", f.mask);
  set("omega_max", f.omega_max);
  set("gains", f.gains);
  set("window", f.window);
  set("index_convention", f.convention);
  if (f.perfect_init) cfg.perfect_init = true;
  return cfg;
}

/// Opens `path` for writing, or returns stdout when empty.
std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty() || path == "-") return std::cout;
  holder = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*holder) throw Error(ErrorKind::InvalidConfig, "cannot write '" + path + "'");
  return *holder;
}

int cmd_tune(const RunConfig& cfg, const std::string& json_path, const std::string& format) {
  cfg.noise.validate();
  const auto report = run_tune(cfg);
  std::unique_ptr<std::ofstream> holder;
  std::ostream& out = open_output(cfg.output, holder);
  if (format == "json") out << tune_to_json(report).dump(2) << '\n';
  else write_tune_text(out, report);
  if (!json_path.empty()) {
    std::ofstream j(json_path);
    if (!j) throw Error(ErrorKind::InvalidConfig, "cannot write '" + json_path + "'");
    j << tune_to_json(report).dump(2) << '\n';
  }
  return kOk;
}

int cmd_simulate(const RunConfig& cfg) {
  if (!cfg.trajectory) throw Error(ErrorKind::InvalidConfig, "simulate needs --case or a custom trajectory");
  const auto result = sim::simulate(*cfg.trajectory, cfg.sim_run());
  std::unique_ptr<std::ofstream> holder;
  write_log(open_output(cfg.output, holder), log_from_sim(result));
  return kOk;
}

int cmd_run(const RunConfig& cfg, const std::string& gain_trace) {
  cfg.noise.validate();
  if (cfg.filters.empty()) throw Error(ErrorKind::InvalidConfig, "no filter selected");
  const Log log = load_or_simulate(cfg);
  const auto gains = resolve_gains(cfg);
  const FilterRun r = run_filter(cfg.filters.front(), cfg, gains, log);
  std::unique_ptr<std::ofstream> holder;
  write_estimates(open_output(cfg.output, holder), r, log);
  const std::string trace_path = gain_trace.empty() ? cfg.gain_trace : gain_trace;
  if (!trace_path.empty() && r.gains.size() > 0) {
    std::ofstream t(trace_path);
    if (!t) throw Error(ErrorKind::InvalidConfig, "cannot write '" + trace_path + "'");
    write_gain_trace(t, r.gains);
  }
  if (r.errors && !cfg.output.empty()) {
    double max_angle = 0.0;
    for (double a : r.errors->angle) max_angle = std::max(max_angle, a);
    std::cout << filters::to_string(r.kind) << ": " << log.samples.size() << " samples, max error angle "
              << format_double(max_angle) << " rad\n";
  }
  return kOk;
}

int cmd_compare(const RunConfig& cfg, const std::string& csv_path, bool timing) {
  cfg.noise.validate();
  const Log log = load_or_simulate(cfg);
  const auto rows = compare_filters(cfg, log, timing);
  std::unique_ptr<std::ofstream> holder;
  write_compare_table(open_output(cfg.output, holder), rows);
  if (!csv_path.empty()) {
    std::ofstream c(csv_path);
    if (!c) throw Error(ErrorKind::InvalidConfig, "cannot write '" + csv_path + "'");
    write_compare_csv(c, rows);
  }
  return kOk;
}

int cmd_selftest(const RunConfig& cfg, const std::string& mutation, bool full) {
  Mutation m = Mutation::None;
  if (mutation == "transposed-right-error") m = Mutation::TransposedRightError;
  else if (!mutation.empty()) throw Error(ErrorKind::InvalidConfig, "unknown mutation '" + mutation + "'");
  const auto results = run_selftest(cfg.noise, m, full);
  write_selftest_report(std::cout, results);
  return all_passed(results) ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attitude estimation filters: tune, simulate, run, compare, selftest"};
  app.require_subcommand(1);

  CommonFlags tune_f, sim_f, run_f, cmp_f, self_f;
  std::string json_path, format = "text", gain_trace, csv_path, mutation;
  bool no_timing = false, full = false;

  auto* tune = app.add_subcommand("tune", "steady-state gains from the Riccati equation");
  add_common(tune, tune_f);
  tune->add_option("--json", json_path, "also write the JSON report here");
  tune->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* simulate = app.add_subcommand("simulate", "synthesize an IMU log with truth columns");
  add_common(simulate, sim_f);

  auto* run = app.add_subcommand("run", "run one filter over a log");
  add_common(run, run_f);
  run->add_option("--gain-trace", gain_trace, "write K(t) CSV for adaptive-gain filters");

  auto* compare = app.add_subcommand("compare", "error statistics and step cost for several filters");
  add_common(compare, cmp_f);
  compare->add_option("--csv", csv_path, "also write the table as CSV");
  compare->add_flag("--no-timing", no_timing, "skip the step-time measurement");

  auto* selftest = app.add_subcommand("selftest", "run the property suites");
  add_common(selftest, self_f);
  selftest->add_option("--mutate", mutation, "inject a known defect (transposed-right-error)");
  selftest->add_flag("--full", full, "full-size suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*tune) return cmd_tune(build_config(tune_f), json_path, format);
    if (*simulate) return cmd_simulate(build_config(sim_f));
    if (*run) return cmd_run(build_config(run_f), gain_trace);
    if (*compare) return cmd_compare(build_config(cmp_f), csv_path, !no_timing);
    if (*selftest) {
      RunConfig cfg;
      try {
        cfg = build_config(self_f);
      } catch (const Error& e) {
        std::cout << "FAIL config: " << e.what() << '\n';
        return kPropertyFailure;
      }
      return cmd_selftest(cfg, mutation, full);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (e.kind() == ErrorKind::NoConvergence) std::cerr << " (residual " << e.value() << ")";
    std::cerr << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

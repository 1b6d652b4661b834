#ifndef AHRS_CLI_CONFIG_HPP_
#define AHRS_CLI_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ahrs/error.hpp"
#include "ahrs/filters/filter_bank.hpp"
#include "ahrs/metrics.hpp"
#include "ahrs/models.hpp"
#include "ahrs/riccati.hpp"
#include "ahrs/sim.hpp"

namespace ahrs::cli {

/**
 * Everything a subcommand may need. Loaded from a flat `key = value` file
 * (`#` starts a comment) and overridden by command-line flags.
 *
 * Keys:
 *   Q, R            36 row-major values, or 6 values for a diagonal
 *   g_e, b_e        3 values
 *   dt, duration    seconds
 *   seed            unsigned integer
 *   case            1, 2, 3 or `custom` (then omega_x/omega_y/omega_z = amplitude, Hz, phase)
 *   filter          one filter name; filters = comma list
 *   mask            row:col list, 1-based, or `selective`
 *   K               36 row-major values (inline gain); gains = path to a tune JSON report
 *   k_p, k_i, k_1, k_2, w_a, w_b, p1, p2
 *   omega_max       comma list (rad/s)
 *   index_convention  rowcol | colrow
 *   initial_q, initial_bias, window, tol, max_iter, input, output, gain_trace, perfect_init
 */
struct RunConfig {
  NoiseConfig noise;
  std::vector<filters::FilterKind> filters{filters::FilterKind::RINCF};
  std::optional<Mat6> K_inline;
  std::string gains_file;
  riccati::GainMask mask;
  filters::NcfGains ncf;
  std::optional<filters::WahbaWeights> wahba;
  std::optional<riccati::Rincf2Params> rincf2;
  std::vector<double> omega_max;
  riccati::IndexConvention convention = riccati::IndexConvention::RowCol;

  std::optional<sim::TrajectoryCase> trajectory;
  double duration = 30.0;
  std::uint64_t seed = 1;
  Quat initial_q;
  Vec3 initial_bias = Vec3::Zero();

  std::string input;
  std::string output;
  std::string gain_trace;
  double window = metrics::kDefaultWindowStart;
  double tol = 1e-12;
  int max_iter = 200000;
  bool perfect_init = false;

  sim::SimRun sim_run() const {
    sim::SimRun r;
    r.duration = duration;
    r.dt = noise.dt;
    r.seed = seed;
    r.initial_q = initial_q;
    r.initial_bias = initial_bias;
    r.cfg = noise;
    return r;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(const std::string& what, int line) {
  throw Error(ErrorKind::Parse, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what, line);
}

inline double parse_double(std::string_view s, int line) {
  const std::string t = trim(s);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) parse_fail("invalid number '" + t + "'", line);
  return v;
}

inline std::vector<double> parse_list(std::string_view s, int line) {
  std::vector<double> v;
  for (const auto& item : split(s, ',')) v.push_back(parse_double(item, line));
  return v;
}

inline Mat6 parse_mat6(std::string_view s, int line) {
  const auto v = parse_list(s, line);
  Mat6 m = Mat6::Zero();
  if (v.size() == 36) {
    for (int i = 0; i < 36; ++i) m(i / 6, i % 6) = v[static_cast<std::size_t>(i)];
  } else if (v.size() == 6) {
    for (int i = 0; i < 6; ++i) m(i, i) = v[static_cast<std::size_t>(i)];
  } else {
    parse_fail("expected 36 or 6 values, got " + std::to_string(v.size()), line);
  }
  return m;
}

inline Vec3 parse_vec3(std::string_view s, int line) {
  const auto v = parse_list(s, line);
  if (v.size() != 3) parse_fail("expected 3 values", line);
  return {v[0], v[1], v[2]};
}

inline bool parse_bool(std::string_view s, int line) {
  const std::string t = trim(s);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  parse_fail("invalid boolean '" + t + "'", line);
}

}  // namespace detail

/// Parses "r:c, r:c, ..." (1-based) or "selective".
inline riccati::GainMask parse_mask(std::string_view s, int line = 0) {
  const std::string t = detail::trim(s);
  if (t == "selective") return riccati::GainMask::selective_magnetometer();
  riccati::GainMask m;
  if (t.empty() || t == "none") return m;
  for (const auto& item : detail::split(t, ',')) {
    const auto rc = detail::split(item, ':');
    if (rc.size() != 2) detail::parse_fail("mask entries are row:col, got '" + item + "'", line);
    const double r = detail::parse_double(rc[0], line), c = detail::parse_double(rc[1], line);
    if (r != std::floor(r) || c != std::floor(c)) detail::parse_fail("mask indices must be integers", line);
    m.add(static_cast<int>(r), static_cast<int>(c));
  }
  return m;
}

/// Applies one `key = value` assignment. `line` is reported in errors.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0) {
  using detail::parse_double;
  auto axis = [&](int i) {
    const auto v = detail::parse_list(value, line);
    if (v.size() != 3) detail::parse_fail(key + " needs amplitude, frequency, phase", line);
    if (!cfg.trajectory || cfg.trajectory->id != 0) cfg.trajectory = sim::TrajectoryCase{};
    auto axes = cfg.trajectory->axes;
    axes[static_cast<std::size_t>(i)] = {v[0], v[1], v[2]};
    cfg.trajectory = sim::TrajectoryCase::custom(axes);
  };
  if (key == "Q") cfg.noise.Q = detail::parse_mat6(value, line);
  else if (key == "R") cfg.noise.R = detail::parse_mat6(value, line);
  else if (key == "g_e") cfg.noise.g_e = detail::parse_vec3(value, line);
  else if (key == "b_e") cfg.noise.b_e = detail::parse_vec3(value, line);
  else if (key == "dt") cfg.noise.dt = parse_double(value, line);
  else if (key == "duration") cfg.duration = parse_double(value, line);
  else if (key == "seed") {
    const std::string t = detail::trim(value);
    std::uint64_t s = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), s);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) detail::parse_fail("invalid seed '" + t + "'", line);
    cfg.seed = s;
  } else if (key == "case") {
    const std::string t = detail::trim(value);
    if (t == "custom") cfg.trajectory = sim::TrajectoryCase{};
    else cfg.trajectory = sim::TrajectoryCase::benchmark(static_cast<int>(parse_double(t, line)));
  } else if (key == "omega_x") axis(0);
  else if (key == "omega_y") axis(1);
  else if (key == "omega_z") axis(2);
  else if (key == "filter" || key == "filters") {
    cfg.filters.clear();
    for (const auto& name : detail::split(value, ',')) cfg.filters.push_back(filters::parse_filter_kind(name));
  } else if (key == "mask") cfg.mask = parse_mask(value, line);
  else if (key == "K") cfg.K_inline = detail::parse_mat6(value, line);
  else if (key == "gains") cfg.gains_file = detail::trim(value);
  else if (key == "k_p") cfg.ncf.k_p = parse_double(value, line);
  else if (key == "k_i") cfg.ncf.k_i = parse_double(value, line);
  else if (key == "k_1") cfg.ncf.k_1 = parse_double(value, line);
  else if (key == "k_2") cfg.ncf.k_2 = parse_double(value, line);
  else if (key == "w_a" || key == "w_b") {
    if (!cfg.wahba) cfg.wahba = filters::WahbaWeights::from_noise(cfg.noise);
    (key == "w_a" ? cfg.wahba->w_a : cfg.wahba->w_b) = parse_double(value, line);
  } else if (key == "p1" || key == "p2") {
    if (!cfg.rincf2) cfg.rincf2 = riccati::Rincf2Params{};
    (key == "p1" ? cfg.rincf2->p1 : cfg.rincf2->p2) = parse_double(value, line);
  } else if (key == "omega_max") cfg.omega_max = detail::parse_list(value, line);
  else if (key == "index_convention") {
    const std::string t = detail::trim(value);
    if (t == "rowcol") cfg.convention = riccati::IndexConvention::RowCol;
    else if (t == "colrow") cfg.convention = riccati::IndexConvention::ColRow;
    else detail::parse_fail("index_convention is rowcol or colrow", line);
  } else if (key == "initial_q") {
    const auto v = detail::parse_list(value, line);
    if (v.size() != 4) detail::parse_fail("initial_q needs 4 values", line);
    cfg.initial_q = Quat{v[0], v[1], v[2], v[3]};
  } else if (key == "initial_bias") cfg.initial_bias = detail::parse_vec3(value, line);
  else if (key == "window") cfg.window = parse_double(value, line);
  else if (key == "tol") cfg.tol = parse_double(value, line);
  else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_double(value, line));
  else if (key == "input") cfg.input = detail::trim(value);
  else if (key == "output") cfg.output = detail::trim(value);
  else if (key == "gain_trace") cfg.gain_trace = detail::trim(value);
  else if (key == "perfect_init") cfg.perfect_init = detail::parse_bool(value, line);
  else detail::parse_fail("unknown key '" + key + "'", line);
}

/// Parses `key = value` text into an existing config (later keys win).
inline void parse_config(std::istream& in, RunConfig& cfg) {
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) detail::parse_fail("expected key = value", line);
    apply_setting(cfg, detail::trim(std::string_view(text).substr(0, eq)),
                  detail::trim(std::string_view(text).substr(eq + 1)), line);
  }
}

inline RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::InvalidConfig, "cannot open config '" + path + "'");
  parse_config(f, cfg);
  return cfg;
}

/// Applies a `key=value` override string.
inline void apply_override(RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::Parse, "override must be key=value, got '" + kv + "'");
  apply_setting(cfg, detail::trim(std::string_view(kv).substr(0, eq)), detail::trim(std::string_view(kv).substr(eq + 1)));
}

}  // namespace ahrs::cli

#endif  // AHRS_CLI_CONFIG_HPP_

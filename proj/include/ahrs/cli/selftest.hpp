#ifndef AHRS_CLI_SELFTEST_HPP_
#define AHRS_CLI_SELFTEST_HPP_

#include <cmath>
#include <cstdio>
#include <limits>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ahrs/error.hpp"
#include "ahrs/filters/filter_bank.hpp"
#include "ahrs/metrics.hpp"
#include "ahrs/models.hpp"
#include "ahrs/riccati.hpp"
#include "ahrs/sim.hpp"

namespace ahrs::cli {

/// Deliberate defects used to check that the suites can fail.
enum class Mutation {
  None,
  TransposedRightError,  // earth-frame error built with R_hat^T instead of R_hat
};

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace selftest_detail {

inline Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return normalized(Quat{n(rng), n(rng), n(rng), n(rng)});
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline OutputError right_error(const Quat& q, const ImuSample& y, const Measurements& yh, Mutation m) {
  if (m != Mutation::TransposedRightError) return output_error_right(q, y, yh);
  const Mat3 rt = quat_to_rotmat(q).transpose();
  return {rt * yh.y_a.cross(y.y_a), rt * yh.y_b.cross(y.y_b)};
}

inline double quat_distance(const Quat& a, const Quat& b) {
  return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace selftest_detail

inline PropertyResult check_output_error_invariance(const NoiseConfig& cfg, bool right, Mutation m, int trials = 100) {
  using namespace selftest_detail;
  std::mt19937_64 rng(right ? 11 : 10);
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    const GroupElement g{random_quat(rng), random_vec(rng, 0.5)};
    const AttState x{random_quat(rng), random_vec(rng, 0.1)};
    ImuSample y;
    y.omega_m = random_vec(rng, 2.0);
    y.y_a = -quat_to_rotmat(random_quat(rng)).transpose() * cfg.g_e;
    y.y_b = quat_to_rotmat(random_quat(rng)).transpose() * cfg.b_e;
    if (right) {
      const OutputError e0 = right_error(x.q, y, predict_measurements(x.q, cfg), m);
      const Transformed t = apply_right_action(g, x, y.omega_m, cfg, y);
      const OutputError e1 = right_error(t.x.q, t.y, predict_measurements(t.x.q, t.cfg), m);
      worst = std::max(worst, (e0.stacked() - e1.stacked()).norm());
    } else {
      const OutputError e0 = output_error_left(y, predict_measurements(x.q, cfg));
      const Transformed t = apply_left_action(g, x, y.omega_m, cfg, y);
      const OutputError e1 = output_error_left(t.y, predict_measurements(t.x.q, t.cfg));
      worst = std::max(worst, (e0.stacked() - e1.stacked()).norm());
    }
  }
  return {right ? "right-output-error-invariance" : "left-output-error-invariance", worst <= 1e-9,
          "max deviation " + fmt(worst)};
}

inline PropertyResult check_group_composition() {
  using namespace selftest_detail;
  std::mt19937_64 rng(12);
  NoiseConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const GroupElement g1{random_quat(rng), random_vec(rng, 0.5)}, g2{random_quat(rng), random_vec(rng, 0.5)};
    const AttState x{random_quat(rng), random_vec(rng, 0.1)};
    ImuSample y;
    y.omega_m = random_vec(rng, 1.0);
    y.y_a = random_vec(rng, 10.0);
    y.y_b = random_vec(rng, 1.0);
    for (bool right : {false, true}) {
      auto act = [&](const GroupElement& g, const AttState& s, const NoiseConfig& c, const ImuSample& yy) {
        return right ? apply_right_action(g, s, yy.omega_m, c, yy) : apply_left_action(g, s, yy.omega_m, c, yy);
      };
      const Transformed inner = act(g2, x, cfg, y);
      const Transformed twice = act(g1, inner.x, inner.cfg, inner.y);
      const Transformed once = act(right ? compose_right(g1, g2) : compose_left(g1, g2), x, cfg, y);
      worst = std::max({worst, quat_distance(twice.x.q, once.x.q), (twice.x.omega_b - once.x.omega_b).norm(),
                        (twice.y.omega_m - once.y.omega_m).norm(), (twice.y.y_a - once.y.y_a).norm(),
                        (twice.cfg.g_e - once.cfg.g_e).norm()});
    }
  }
  return {"group-action-composition", worst <= 1e-12, "max deviation " + fmt(worst)};
}

inline PropertyResult check_dare_scalar_oracle() {
  using M1 = Eigen::Matrix<double, 1, 1>;
  const auto sol = riccati::solve_dare<1, 1>(M1::Ones(), M1::Ones(), M1::Ones(), M1::Ones());
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double err = std::max(std::abs(sol.P(0, 0) - phi), std::abs(sol.K(0, 0) - (phi - 1.0)));
  return {"dare-scalar-oracle", err <= 1e-10, "error " + selftest_detail::fmt(err)};
}

/// RINCF on a transformed stream equals the transformed RINCF trajectory.
inline PropertyResult check_rincf_right_invariance(const NoiseConfig& cfg, const Mat6& K) {
  using namespace selftest_detail;
  std::mt19937_64 rng(13);
  sim::SimRun run;
  run.duration = 2.0;
  run.cfg = cfg;
  run.seed = 5;
  const auto sr = sim::simulate(sim::TrajectoryCase::benchmark(1), run);
  const GroupElement g{random_quat(rng), random_vec(rng, 0.2)};
  const AttState x0{quat_from_euler(0.1, -0.2, 0.3), Vec3(0.01, -0.02, 0.03)};

  filters::FilterGains gains;
  gains.K = riccati::GainMatrix{K, {}};
  filters::Filter a(filters::FilterKind::RINCF, cfg, gains), b(filters::FilterKind::RINCF, cfg, gains);
  a.reset(x0);
  b.reset(apply_right_action(g, x0, Vec3::Zero(), cfg, ImuSample{}).x);
  double worst = 0.0;
  for (std::size_t i = 1; i < sr.samples.size(); ++i) {
    const ImuSample& y = sr.samples[i];
    const auto oa = a.step(y, run.dt);
    const auto ob = b.step(apply_right_action(g, x0, y.omega_m, cfg, y).y, run.dt);
    const AttState expect = apply_right_action(g, oa.x_hat, Vec3::Zero(), cfg, ImuSample{}).x;
    worst = std::max({worst, quat_distance(expect.q, ob.x_hat.q), (expect.omega_b - ob.x_hat.omega_b).norm()});
  }
  return {"rincf-right-invariance", worst <= 1e-8, "max deviation " + fmt(worst)};
}

struct ConvergenceTrial {
  bool converged = false;
  bool bounded = true;
  double time = 0.0;
};

/// Stationary platform, noiseless sensors, initial errors as given.
inline ConvergenceTrial rincf_convergence_trial(const NoiseConfig& cfg, const Mat6& K, const Quat& attitude_error,
                                               const Vec3& bias_error, double max_time = 200.0) {
  filters::FilterGains gains;
  gains.K = riccati::GainMatrix{K, {}};
  filters::Filter f(filters::FilterKind::RINCF, cfg, gains);
  const Quat q_true = quat_from_euler(0.2, -0.1, 0.7);
  const Vec3 b_true(0.01, -0.02, 0.005);
  f.reset({quat_mul(attitude_error, q_true), b_true + bias_error});
  ImuSample y;
  const Measurements m = predict_measurements(q_true, cfg);
  y.omega_m = b_true;
  y.y_a = m.y_a;
  y.y_b = m.y_b;
  const double a0 = rotation_angle(attitude_error), b0 = bias_error.norm();
  ConvergenceTrial r;
  const long steps = std::lround(max_time / cfg.dt);
  for (long k = 1; k <= steps; ++k) {
    y.t = k * cfg.dt;
    const auto o = f.step(y, cfg.dt);
    const double a = rotation_angle(quat_mul(o.x_hat.q, quat_inv(q_true)));
    const double b = (o.x_hat.omega_b - b_true).norm();
    if (!std::isfinite(a) || !std::isfinite(b) || a > std::numbers::pi / 2) {
      r.bounded = false;
      return r;
    }
    if (a < 1e-4 * a0 && b < 1e-4 * b0) {
      r.converged = true;
      r.time = y.t;
      return r;
    }
  }
  return r;
}

inline PropertyResult check_rincf_local_convergence(const NoiseConfig& cfg, const Mat6& K, int trials) {
  using namespace selftest_detail;
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> ang(0.0, 15.0 * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> mag(0.0, 0.05);
  int ok = 0;
  double slowest = 0.0;
  for (int i = 0; i < trials; ++i) {
    Vec3 axis = random_vec(rng, 1.0);
    axis.normalize();
    Vec3 bdir = random_vec(rng, 1.0);
    bdir.normalize();
    const auto r = rincf_convergence_trial(cfg, K, quat_from_axis_angle(axis, ang(rng)), mag(rng) * bdir);
    if (r.converged && r.bounded) ++ok;
    slowest = std::max(slowest, r.time);
  }
  return {"rincf-local-convergence", ok == trials,
          std::to_string(ok) + "/" + std::to_string(trials) + " converged, slowest " + fmt(slowest) + " s"};
}

/// Largest one-step increase of V along a small-error RINCF run.
inline double lyapunov_max_increase(const NoiseConfig& cfg, const Mat6& K, const Vec3& d_mu0, const Vec3& d_beta0,
                                    double duration = 20.0) {
  filters::FilterGains gains;
  gains.K = riccati::GainMatrix{K, {}};
  filters::Filter f(filters::FilterKind::RINCF, cfg, gains);
  const Quat q_true;  // identity
  f.reset({normalized(Quat{1.0, d_mu0.x(), d_mu0.y(), d_mu0.z()}), d_beta0});
  ImuSample y;
  const Measurements m = predict_measurements(q_true, cfg);
  y.y_a = m.y_a;
  y.y_b = m.y_b;
  std::vector<Vec3> mu, beta;
  auto record = [&](const AttState& x) {
    const auto e = metrics::small_error(q_true, Vec3::Zero(), x);
    mu.push_back(e.d_mu);
    beta.push_back(e.d_beta);
  };
  record(f.state().x_hat);
  const long steps = std::lround(duration / cfg.dt);
  for (long k = 1; k <= steps; ++k) {
    y.t = k * cfg.dt;
    record(f.step(y, cfg.dt).x_hat);
  }
  const Mat3 A_beta = metrics::blocks_from_gain(K, cfg.g_e, cfg.b_e, cfg.dt).A_beta;
  const auto V = metrics::lyapunov_series(mu, beta, A_beta);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < V.size(); ++i) worst = std::max(worst, V[i] - V[i - 1]);
  return worst;
}

inline PropertyResult check_lyapunov(const NoiseConfig& cfg, const Mat6& K, int trials) {
  using namespace selftest_detail;
  std::mt19937_64 rng(15);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < trials; ++i)
    worst = std::max(worst, lyapunov_max_increase(cfg, K, random_vec(rng, 1e-3 / std::sqrt(3.0)),
                                                  random_vec(rng, 1e-3 / std::sqrt(3.0))));
  return {"lyapunov-non-increasing", worst <= 1e-9, "largest step increase " + fmt(worst)};
}

inline PropertyResult check_noiseless_fixed_point(const NoiseConfig& cfg, const filters::FilterGains& gains,
                                                  double duration) {
  sim::SimRun run;
  run.duration = duration;
  run.cfg = cfg;
  run.cfg.Q.setZero();
  run.cfg.R.setZero();
  run.dt = cfg.dt;
  const auto sr = sim::simulate(sim::TrajectoryCase::benchmark(1), run);
  double worst = 0.0;
  std::string worst_name;
  for (auto kind : filters::kAllFilters) {
    filters::Filter f(kind, cfg, gains);
    f.reset({sr.truth[0].q_true, sr.truth[0].bias_true});
    for (std::size_t i = 1; i < sr.samples.size(); ++i) {
      const auto o = f.step(sr.samples[i], run.dt);
      const double a = metrics::attitude_error(sr.truth[i].q_true, o.x_hat.q).angle;
      if (a > worst) {
        worst = a;
        worst_name = filters::to_string(kind);
      }
    }
  }
  return {"noiseless-fixed-point", worst <= 1e-6,
          "max error " + selftest_detail::fmt(worst) + " rad" + (worst_name.empty() ? "" : " (" + worst_name + ")")};
}

/**
 * Runs the property suites in order, validating the noise configuration
 * first. Returns one result per property; a config failure stops the run.
 */
inline std::vector<PropertyResult> run_selftest(const NoiseConfig& cfg, Mutation m = Mutation::None,
                                                bool full = false) {
  std::vector<PropertyResult> out;
  try {
    cfg.validate();
    out.push_back({"noise-config-valid", true, ""});
  } catch (const Error& e) {
    out.push_back({"noise-config-valid", false, e.what()});
    return out;
  }
  auto guarded = [&](const char* name, const std::function<PropertyResult()>& fn) {
    try {
      out.push_back(fn());
    } catch (const Error& e) {
      out.push_back({name, false, e.what()});
    }
  };
  const Mat6 K = riccati::solve_dare(riccati::build_discrete_system(cfg)).K;
  filters::FilterGains gains = filters::default_gains(cfg);

  guarded("left-output-error-invariance", [&] { return check_output_error_invariance(cfg, false, m); });
  guarded("right-output-error-invariance", [&] { return check_output_error_invariance(cfg, true, m); });
  guarded("group-action-composition", [] { return check_group_composition(); });
  guarded("dare-scalar-oracle", [] { return check_dare_scalar_oracle(); });
  guarded("rincf-right-invariance", [&] { return check_rincf_right_invariance(cfg, K); });
  guarded("rincf-local-convergence", [&] { return check_rincf_local_convergence(cfg, K, full ? 100 : 10); });
  guarded("lyapunov-non-increasing", [&] { return check_lyapunov(cfg, K, full ? 20 : 3); });
  guarded("noiseless-fixed-point", [&] { return check_noiseless_fixed_point(cfg, gains, full ? 10.0 : 2.0); });
  guarded("selective-mask-zeros", [&] {
    const auto mask = riccati::GainMask::selective_magnetometer();
    const auto r = riccati::tune(cfg, mask);
    double worst = 0.0;
    for (const auto& [row, col] : mask.entries())
      worst = std::max(worst, std::abs(r.K(row - 1, col - 1)));
    return PropertyResult{"selective-mask-zeros", worst == 0.0, "max masked entry " + selftest_detail::fmt(worst)};
  });
  return out;
}

inline bool all_passed(const std::vector<PropertyResult>& rs) {
  for (const auto& r : rs)
    if (!r.pass) return false;
  return !rs.empty();
}

inline void write_selftest_report(std::ostream& out, const std::vector<PropertyResult>& rs) {
  for (const auto& r : rs) out << (r.pass ? "PASS " : "FAIL ") << r.name << (r.detail.empty() ? "" : ": ") << r.detail << '\n';
}

}  // namespace ahrs::cli

#endif  // AHRS_CLI_SELFTEST_HPP_

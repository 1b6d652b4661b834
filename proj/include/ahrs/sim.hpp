#ifndef AHRS_SIM_HPP_
#define AHRS_SIM_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ahrs/error.hpp"
#include "ahrs/models.hpp"
#include "ahrs/so3.hpp"

namespace ahrs::sim {

/// amplitude * sin(2 pi frequency t + phase)
struct Sinusoid {
  double amplitude = 0.0;  // rad/s
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};

/**
 * @brief Body angular-velocity profile. Cases 1-3 are the low, medium and
 * high angular velocity benchmark trajectories; id 0 is a custom profile.
 */
struct TrajectoryCase {
  int id = 0;
  std::array<Sinusoid, 3> axes{};

  static TrajectoryCase benchmark(int id) {
    constexpr double pi = std::numbers::pi;
    switch (id) {
      case 1:
        return {1, {{{pi / 3, 0.7, pi / 3}, {pi / 3, 0.2, pi}, {pi / 3, 0.4, 0.0}}}};
      case 2:
        return {2, {{{pi, 0.7, 0.0}, {pi, 0.02, pi}, {pi, 0.04, pi / 3}}}};
      case 3:
        return {3, {{{5 * pi / 3, 0.07, pi / 3}, {5 * pi / 3, 0.02, pi}, {5 * pi / 3, 0.04, 0.0}}}};
      default:
        throw Error(ErrorKind::InvalidConfig, "trajectory case must be 1, 2 or 3");
    }
  }

  static TrajectoryCase custom(const std::array<Sinusoid, 3>& axes) {
    for (const auto& s : axes)
      if (!(s.frequency >= 0.0)) throw Error(ErrorKind::InvalidConfig, "sinusoid frequency must be >= 0");
    return {0, axes};
  }

  /// Largest amplitude over the three axes.
  double omega_max() const {
    return std::max({std::abs(axes[0].amplitude), std::abs(axes[1].amplitude), std::abs(axes[2].amplitude)});
  }
};

inline Vec3 omega_profile(const TrajectoryCase& c, double t) {
  Vec3 w;
  for (int i = 0; i < 3; ++i) {
    const auto& s = c.axes[i];
    w[i] = s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
  }
  return w;
}

struct SimRun {
  double duration = 30.0;
  double dt = 0.005;
  std::uint64_t seed = 1;
  Quat initial_q;
  Vec3 initial_bias = Vec3::Zero();
  NoiseConfig cfg;

  /// Samples at t_k = k dt for k = 0 .. steps().
  int steps() const { return static_cast<int>(std::llround(duration / dt)); }

  void validate() const {
    if (!(dt > 0.0) || !(duration > dt)) throw Error(ErrorKind::InvalidConfig, "simulation needs duration > dt > 0");
    if (std::abs(initial_q.norm() - 1.0) > 1e-9) throw Error(ErrorKind::InvalidConfig, "initial attitude must be unit norm");
    cfg.validate(false);
  }
};

struct TruthRecord {
  double t = 0.0;
  Quat q_true;
  Vec3 omega_true = Vec3::Zero();
  Vec3 bias_true = Vec3::Zero();
};

namespace detail {

/// Zero-mean Gaussian vector generator for a PSD covariance, using the
/// symmetric square root so singular (or zero) covariances are allowed.
class GaussianVec3 {
 public:
  explicit GaussianVec3(const Mat3& cov) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (cov + cov.transpose()));
    const Vec3 sqrt_eig = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    sqrt_ = es.eigenvectors() * sqrt_eig.asDiagonal();
  }

  template <class Rng>
  Vec3 operator()(Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec3 z;
    z.x() = n01(rng);
    z.y() = n01(rng);
    z.z() = n01(rng);
    return sqrt_ * z;
  }

 private:
  Mat3 sqrt_ = Mat3::Zero();
};

inline Quat rk4_step(const TrajectoryCase& c, const Quat& q, double t, double dt) {
  auto f = [&](const Quat& qq, double tt) { return quat_mul(qq, Quat::pure(omega_profile(c, tt))) * 0.5; };
  const Quat k1 = f(q, t);
  const Quat k2 = f(q + k1 * (0.5 * dt), t + 0.5 * dt);
  const Quat k3 = f(q + k2 * (0.5 * dt), t + 0.5 * dt);
  const Quat k4 = f(q + k3 * dt, t + dt);
  return normalized(q + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0));
}

// Independent streams for the bias walk and the measurement noise.
inline constexpr std::uint64_t kMeasurementStream = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/**
 * @brief Integrates the true attitude with RK4 on qdot = 1/2 q*omega(t) and
 * advances the gyro bias random walk bias += n_b dt, n_b ~ N(0, Q_bias/dt).
 *
 * Random numbers come from std::mt19937_64 seeded with run.seed.
 */
inline std::vector<TruthRecord> integrate_truth(const TrajectoryCase& c, const SimRun& run) {
  run.validate();
  const int n = run.steps();
  std::mt19937_64 rng(run.seed);
  detail::GaussianVec3 bias_noise(run.cfg.Q_bias() / run.dt);

  std::vector<TruthRecord> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  Quat q = normalized(run.initial_q);
  Vec3 bias = run.initial_bias;
  for (int k = 0; k <= n; ++k) {
    const double t = k * run.dt;
    if (!q.is_finite() || !bias.allFinite()) throw Error(ErrorKind::NonFiniteState, "truth integration diverged", t);
    out.push_back({t, q, omega_profile(c, t), bias});
    if (k == n) break;
    q = detail::rk4_step(c, q, t, run.dt);
    bias += bias_noise(rng) * run.dt;
  }
  return out;
}

/**
 * @brief Synthesizes IMU samples from a truth sequence.
 *
 * The gyro behaves as a delta-angle sensor: sample k reports the constant
 * body rate that carries q_true(t_{k-1}) to q_true(t_k), plus bias_true(t_k)
 * and white noise N(0, Q_gyro/dt). Sample 0 reports the instantaneous rate.
 * Accelerometer and magnetometer follow y_a = -R^T g_e + n_a,
 * y_b = R^T b_e + n_m with per-sample covariances R_accel and R_mag.
 */
inline std::vector<ImuSample> synthesize_measurements(const std::vector<TruthRecord>& truth, const SimRun& run) {
  if (truth.empty()) throw Error(ErrorKind::InvalidConfig, "truth sequence is empty");
  const NoiseConfig& cfg = run.cfg;
  std::mt19937_64 rng(run.seed ^ detail::kMeasurementStream);
  detail::GaussianVec3 gyro_noise(cfg.Q_gyro() / run.dt);
  detail::GaussianVec3 accel_noise(cfg.R_accel());
  detail::GaussianVec3 mag_noise(cfg.R_mag());

  std::vector<ImuSample> out;
  out.reserve(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const TruthRecord& rec = truth[k];
    ImuSample s;
    s.t = rec.t;
    Vec3 rate = rec.omega_true;
    if (k > 0) {
      const double h = rec.t - truth[k - 1].t;
      rate = quat_log(quat_mul(quat_inv(truth[k - 1].q_true), rec.q_true)) / h;
    }
    s.omega_m = rate + rec.bias_true + gyro_noise(rng);
    const Measurements m = predict_measurements(rec.q_true, cfg);
    s.y_a = m.y_a + accel_noise(rng);
    s.y_b = m.y_b + mag_noise(rng);
    out.push_back(s);
  }
  return out;
}

struct SimResult {
  std::vector<TruthRecord> truth;
  std::vector<ImuSample> samples;
};

inline SimResult simulate(const TrajectoryCase& c, const SimRun& run) {
  SimResult r;
  r.truth = integrate_truth(c, run);
  r.samples = synthesize_measurements(r.truth, run);
  return r;
}

}  // namespace ahrs::sim

#endif  // AHRS_SIM_HPP_

#ifndef AHRS_METRICS_HPP_
#define AHRS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ahrs/error.hpp"
#include "ahrs/models.hpp"
#include "ahrs/riccati.hpp"
#include "ahrs/so3.hpp"

namespace ahrs::metrics {

struct AttitudeError {
  Vec3 per_axis = Vec3::Zero();  // roll, pitch, yaw of mu (rad)
  double angle = 0.0;            // geodesic angle of mu (rad)
};

/// Right-invariant error mu = q_hat * q_true^-1.
inline AttitudeError attitude_error(const Quat& q_true, const Quat& q_hat) {
  const Quat mu = quat_mul(q_hat, quat_inv(q_true));
  return {euler_from_quat(mu).as_vector(), rotation_angle(mu)};
}

/// Channels: 0 roll, 1 pitch, 2 yaw, 3 total angle.
struct ErrorSeries {
  std::vector<double> t;
  std::vector<double> roll, pitch, yaw, angle;

  void push(double time, const AttitudeError& e) {
    t.push_back(time);
    roll.push_back(e.per_axis[0]);
    pitch.push_back(e.per_axis[1]);
    yaw.push_back(e.per_axis[2]);
    angle.push_back(e.angle);
  }

  std::size_t size() const { return t.size(); }

  const std::vector<double>& channel(int i) const {
    switch (i) {
      case 0: return roll;
      case 1: return pitch;
      case 2: return yaw;
      default: return angle;
    }
  }
};

inline constexpr double kDefaultWindowStart = 2.5;  // s

struct SummaryStats {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d std = Eigen::Vector4d::Zero();  // population std
  Eigen::Vector4d rms = Eigen::Vector4d::Zero();
  double window_start = kDefaultWindowStart;
  std::size_t count = 0;
};

/// Per-channel statistics over samples with t >= window_start.
inline SummaryStats summarize(const ErrorSeries& s, double window_start = kDefaultWindowStart) {
  SummaryStats out;
  out.window_start = window_start;
  Eigen::Vector4d sum = Eigen::Vector4d::Zero(), sq = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.t[i] < window_start) continue;
    const Eigen::Vector4d v(s.roll[i], s.pitch[i], s.yaw[i], s.angle[i]);
    sum += v;
    sq += v.cwiseAbs2();
    ++out.count;
  }
  if (out.count == 0) throw Error(ErrorKind::EmptyWindow, "no samples after window start", window_start);
  const double n = static_cast<double>(out.count);
  out.mean = sum / n;
  out.rms = (sq / n).cwiseSqrt();
  // Two-pass variance for accuracy.
  Eigen::Vector4d var = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.t[i] < window_start) continue;
    const Eigen::Vector4d v(s.roll[i], s.pitch[i], s.yaw[i], s.angle[i]);
    var += (v - out.mean).cwiseAbs2();
  }
  out.std = (var / n).cwiseSqrt();
  return out;
}

inline constexpr int kDefaultGainDecimation = 5;

/// Gain history K(t), keeping every `decimation`-th sample.
struct GainTrace {
  int decimation = kDefaultGainDecimation;
  std::vector<double> t;
  std::vector<Mat6> K;

  /// `step` is the sample index; only multiples of the decimation are kept.
  void record(long step, double time, const Mat6& gain) {
    if (decimation <= 1 || step % decimation == 0) {
      t.push_back(time);
      K.push_back(gain);
    }
  }

  std::size_t size() const { return t.size(); }
};

inline std::size_t tail_begin(std::size_t n, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "tail fraction must be in (0, 1]", tail_fraction);
  const auto keep = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
  return n - std::min(n, std::max<std::size_t>(keep, 1));
}

/// Per-entry mean over the trailing fraction of the trace.
inline Mat6 gain_tail_mean(const GainTrace& tr, double tail_fraction = 0.5) {
  if (tr.size() == 0) throw Error(ErrorKind::EmptyWindow, "empty gain trace");
  const std::size_t b = tail_begin(tr.size(), tail_fraction);
  Mat6 m = Mat6::Zero();
  for (std::size_t i = b; i < tr.size(); ++i) m += tr.K[i];
  return m / static_cast<double>(tr.size() - b);
}

/// Per-entry population std over the trailing fraction.
inline Mat6 gain_tail_std(const GainTrace& tr, double tail_fraction = 0.5) {
  const Mat6 mean = gain_tail_mean(tr, tail_fraction);
  const std::size_t b = tail_begin(tr.size(), tail_fraction);
  Mat6 v = Mat6::Zero();
  for (std::size_t i = b; i < tr.size(); ++i) v += (tr.K[i] - mean).cwiseAbs2();
  return (v / static_cast<double>(tr.size() - b)).cwiseSqrt();
}

/// std / max(|mean|, 1e-9) per entry over the trailing fraction.
inline Mat6 gain_stationarity(const GainTrace& tr, double tail_fraction = 0.5) {
  const Mat6 mean = gain_tail_mean(tr, tail_fraction);
  const Mat6 sd = gain_tail_std(tr, tail_fraction);
  return sd.cwiseQuotient(mean.cwiseAbs().cwiseMax(1e-9));
}

/// Continuous-time blocks of the linearized RINCF error system,
/// d(dmu)/dt = -dbeta/2 + A_mu dmu, d(dbeta)/dt = I_w x dbeta + A_beta dmu.
struct LinearizedBlocks {
  Mat3 A_mu = Mat3::Zero();
  Mat3 A_beta = Mat3::Zero();
};

/// Diagonal forms from the structured parameters, valid for
/// g_e = (0, 0, g) and b_e = (b, 0, 0).
inline LinearizedBlocks blocks_from_params(const riccati::StructuredGains& p, double g, double b) {
  const double g2 = g * g, b2 = b * b;
  LinearizedBlocks L;
  L.A_mu.diagonal() << -2 * g2 * p.a[0], -2 * g2 * p.a[1] - 2 * b2 * p.b[1], -2 * b2 * p.b[2];
  L.A_beta.diagonal() << 2 * g2 * p.c[0], 2 * g2 * p.c[1] + 2 * b2 * p.d[1], 2 * b2 * p.d[2];
  return L;
}

/// General form: rows of L C with the observer gain L = -K and the output
/// matrix C of the reference directions. K is per sample; dividing by dt
/// gives continuous-time blocks.
inline LinearizedBlocks blocks_from_gain(const Mat6& K, const Vec3& g_e, const Vec3& b_e, double dt = 1.0) {
  const Mat6 LC = riccati::observer_gain(K) * riccati::right_invariant_jacobians(g_e, b_e).C / dt;
  return {LC.topLeftCorner<3, 3>(), LC.bottomLeftCorner<3, 3>()};
}

/// Small-error coordinates (dmu, dbeta) of the right-invariant error
/// mu = q_hat q^-1, beta = R_q (omega_b_hat - omega_b).
struct SmallError {
  Vec3 d_mu = Vec3::Zero();
  Vec3 d_beta = Vec3::Zero();
};

inline SmallError small_error(const Quat& q_true, const Vec3& bias_true, const AttState& est) {
  Quat mu = quat_mul(est.q, quat_inv(q_true));
  if (mu.a < 0) mu = -mu;
  return {mu.vec(), quat_rotate(q_true, est.omega_b - bias_true)};
}

/// V = dbeta^T dbeta + (2 A_beta dmu)^T dmu at every sample.
inline std::vector<double> lyapunov_series(const std::vector<Vec3>& d_mu, const std::vector<Vec3>& d_beta,
                                           const Mat3& A_beta) {
  if (d_mu.size() != d_beta.size()) throw Error(ErrorKind::InvalidConfig, "error sequences differ in length");
  std::vector<double> v(d_mu.size());
  for (std::size_t i = 0; i < d_mu.size(); ++i)
    v[i] = d_beta[i].squaredNorm() + (2.0 * A_beta * d_mu[i]).dot(d_mu[i]);
  return v;
}

}  // namespace ahrs::metrics

#endif  // AHRS_METRICS_HPP_

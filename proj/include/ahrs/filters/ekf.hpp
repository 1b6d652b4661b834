#ifndef AHRS_FILTERS_EKF_HPP_
#define AHRS_FILTERS_EKF_HPP_

#include "ahrs/filters/common.hpp"

namespace ahrs::filters {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat4 = Eigen::Matrix4d;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat67 = Eigen::Matrix<double, 6, 7>;

namespace ekf {

/// q*p = left_matrix(q) p
inline Mat4 left_matrix(const Quat& q) {
  Mat4 m;
  m << q.a, -q.b, -q.c, -q.d,
       q.b,  q.a, -q.d,  q.c,
       q.c,  q.d,  q.a, -q.b,
       q.d, -q.c,  q.b,  q.a;
  return m;
}

/// q*p = right_matrix(p) q
inline Mat4 right_matrix(const Quat& p) {
  Mat4 m;
  m << p.a, -p.b, -p.c, -p.d,
       p.b,  p.a,  p.d, -p.c,
       p.c, -p.d,  p.a,  p.b,
       p.d,  p.c, -p.b,  p.a;
  return m;
}

/// d exp(theta) / d theta for the unit quaternion exp(theta) = (cos(|theta|/2), sin(|theta|/2) theta/|theta|).
inline Mat43 exp_jacobian(const Vec3& theta) {
  const double phi = theta.norm();
  double s, ds_over_phi;
  Eigen::RowVector3d dw;
  if (phi < 1e-5) {
    s = 0.5 - phi * phi / 48.0;
    ds_over_phi = -1.0 / 24.0;
    dw = -0.25 * theta.transpose();
  } else {
    s = std::sin(0.5 * phi) / phi;
    ds_over_phi = (0.5 * std::cos(0.5 * phi) * phi - std::sin(0.5 * phi)) / (phi * phi * phi);
    dw = -0.5 * std::sin(0.5 * phi) / phi * theta.transpose();
  }
  Mat43 j;
  j.row(0) = dw;
  j.bottomRows<3>() = s * Mat3::Identity() + ds_over_phi * theta * theta.transpose();
  return j;
}

/// d (R(q)^T v) / d (a, b, c, d), for an arbitrary (not necessarily unit) q.
inline Mat34 rotate_transpose_jacobian(const Quat& q, const Vec3& v) {
  const double w = q.a;
  const Vec3 r = q.vec();
  Mat34 j;
  j.col(0) = 2.0 * w * v - 2.0 * r.cross(v);
  j.rightCols<3>() = -2.0 * v * r.transpose() + 2.0 * r.dot(v) * Mat3::Identity() + 2.0 * r * v.transpose() +
                     2.0 * w * skew(v);
  return j;
}

/// Unnormalized quaternion form of R(q)^T v.
inline Vec3 rotate_transpose(const Quat& q, const Vec3& v) {
  const double w = q.a;
  const Vec3 r = q.vec();
  return (w * w - r.squaredNorm()) * v + 2.0 * r.dot(v) * r - 2.0 * w * r.cross(v);
}

inline Vec7 pack(const AttState& x) {
  Vec7 s;
  s << x.q.a, x.q.b, x.q.c, x.q.d, x.omega_b;
  return s;
}

inline AttState unpack(const Vec7& s) { return {Quat{s[0], s[1], s[2], s[3]}, s.tail<3>()}; }

/// Process model f(q, b) = (q * exp((omega_m - b) dt), b), before normalization.
inline Vec7 process(const Vec7& s, const Vec3& omega_m, double dt) {
  const AttState x = unpack(s);
  AttState out{quat_mul(x.q, quat_exp((omega_m - x.omega_b) * dt)), x.omega_b};
  return pack(out);
}

inline Mat7 process_jacobian(const Vec7& s, const Vec3& omega_m, double dt) {
  const AttState x = unpack(s);
  const Vec3 theta = (omega_m - x.omega_b) * dt;
  Mat7 F = Mat7::Identity();
  F.topLeftCorner<4, 4>() = right_matrix(quat_exp(theta));
  F.topRightCorner<4, 3>() = -dt * left_matrix(x.q) * exp_jacobian(theta);
  return F;
}

/// Measurement model h(q) = (-R^T g_e, R^T b_e).
inline Vec6 measurement(const Vec7& s, const NoiseConfig& cfg) {
  const Quat q = unpack(s).q;
  Vec6 h;
  h << -rotate_transpose(q, cfg.g_e), rotate_transpose(q, cfg.b_e);
  return h;
}

inline Mat67 measurement_jacobian(const Vec7& s, const NoiseConfig& cfg) {
  const Quat q = unpack(s).q;
  Mat67 H = Mat67::Zero();
  H.topLeftCorner<3, 4>() = -rotate_transpose_jacobian(q, cfg.g_e);
  H.bottomLeftCorner<3, 4>() = rotate_transpose_jacobian(q, cfg.b_e);
  return H;
}

}  // namespace ekf

/**
 * @brief Additive EKF on the 7-dim state (q, omega_b).
 *
 * The quaternion is renormalized after each predict and update; the
 * covariance is not projected. Gyro noise enters through the bias columns
 * of F, bias noise as Q_bias dt^2.
 */
inline StepOutput step_ekf(FilterState& s, const ImuSample& u, const NoiseConfig& cfg, double dt) {
  detail::require_positive_dt(dt);
  if (!s.P_ekf) throw Error(ErrorKind::MissingGains, "EKF state has no covariance");
  Mat7& P = *s.P_ekf;

  Vec7 xs = ekf::pack(s.x_hat);
  const Mat7 F = ekf::process_jacobian(xs, u.omega_m, dt);
  xs = ekf::process(xs, u.omega_m, dt);
  xs.head<4>().normalize();
  Mat7 Qd = Mat7::Zero();
  const Mat43 G = F.topRightCorner<4, 3>();
  Qd.topLeftCorner<4, 4>() = G * cfg.Q_gyro() * G.transpose();
  Qd.bottomRightCorner<3, 3>() = cfg.Q_bias() * dt * dt;
  P = F * P * F.transpose() + Qd;

  const Mat67 H = ekf::measurement_jacobian(xs, cfg);
  Vec6 y;
  y << u.y_a, u.y_b;
  const Vec6 innov = y - ekf::measurement(xs, cfg);
  const Mat6 S = H * P * H.transpose() + cfg.R;
  Eigen::LDLT<Mat6> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw Error(ErrorKind::SingularInnovation, "EKF innovation covariance is not invertible", u.t);
  const Eigen::Matrix<double, 7, 6> K = ldlt.solve(H * P).transpose();
  xs += K * innov;
  xs.head<4>().normalize();
  P = (Mat7::Identity() - K * H) * P;
  P = 0.5 * (P + P.transpose());

  s.x_hat = ekf::unpack(xs);
  s.t = u.t;
  detail::require_finite(s, u.t);
  const OutputError e = output_error_left(u, predict_measurements(s.x_hat.q, cfg));
  return detail::make_output(s, e, std::nullopt);
}

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_EKF_HPP_

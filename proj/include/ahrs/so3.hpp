#ifndef AHRS_SO3_HPP_
#define AHRS_SO3_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ahrs/error.hpp"

namespace ahrs {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/**
 * @brief Quaternion in scalar-first layout (a, b, c, d).
 *
 * A unit quaternion parameterizes the rotation from the earth frame {E} to
 * the body frame {B}; R_q v = q * (0, v) * q^-1 maps body-frame coordinates
 * to earth-frame coordinates.
 */
struct Quat {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  constexpr Quat() = default;
  constexpr Quat(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}

  static constexpr Quat identity() { return {}; }
  /// Pure quaternion (0, v).
  static Quat pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }

  Vec3 vec() const { return {b, c, d}; }
  Eigen::Vector4d coeffs() const { return {a, b, c, d}; }
  double norm() const { return std::sqrt(a * a + b * b + c * c + d * d); }
  bool is_finite() const {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
  }

  Quat operator-() const { return {-a, -b, -c, -d}; }
  Quat operator+(const Quat& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Quat operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
};

/// Hamilton product, component formula as written for scalar-first layout.
/// Not renormalized.
inline Quat quat_mul(const Quat& q1, const Quat& q2) {
  return {q1.a * q2.a - q1.b * q2.b - q1.c * q2.c - q1.d * q2.d,
          q1.a * q2.b + q1.b * q2.a + q1.c * q2.d - q1.d * q2.c,
          q1.a * q2.c - q1.b * q2.d + q1.c * q2.a + q1.d * q2.b,
          q1.a * q2.d + q1.b * q2.c - q1.c * q2.b + q1.d * q2.a};
}

inline Quat operator*(const Quat& q1, const Quat& q2) { return quat_mul(q1, q2); }

/// Inverse of a unit quaternion (its conjugate).
inline Quat quat_inv(const Quat& q) { return {q.a, -q.b, -q.c, -q.d}; }

inline Quat normalized(const Quat& q) {
  const double n = q.norm();
  return {q.a / n, q.b / n, q.c / n, q.d / n};
}

inline Mat3 quat_to_rotmat(const Quat& q) {
  const double aa = q.a * q.a, bb = q.b * q.b, cc = q.c * q.c, dd = q.d * q.d;
  const double ab = q.a * q.b, ac = q.a * q.c, ad = q.a * q.d;
  const double bc = q.b * q.c, bd = q.b * q.d, cd = q.c * q.d;
  Mat3 r;
  r << aa + bb - cc - dd, 2.0 * (bc - ad), 2.0 * (bd + ac),
       2.0 * (bc + ad), aa - bb + cc - dd, 2.0 * (cd - ab),
       2.0 * (bd - ac), 2.0 * (cd + ab), aa - bb - cc + dd;
  return r;
}

/// q * (0, v) * q^-1, i.e. R_q v.
inline Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  return quat_mul(quat_mul(q, Quat::pure(v)), quat_inv(q)).vec();
}

/// Shepperd's method; returns the representative with a >= 0.
inline Quat quat_from_rotmat(const Mat3& r) {
  const double tr = r.trace();
  Quat q;
  if (tr > r(0, 0) && tr > r(1, 1) && tr > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.a < 0.0) q = -q;
  return normalized(q);
}

/// Exponential map of a rotation vector: rotation by |theta| about theta/|theta|.
inline Quat quat_exp(const Vec3& theta) {
  // Same work for every input: both trig calls always run, the series only
  // replaces sin(x/2)/x near zero.
  const double angle = theta.norm();
  const double s = std::sin(0.5 * angle), c = std::cos(0.5 * angle);
  const double k = angle < 1e-8 ? 0.5 - angle * angle / 48.0 : s / angle;
  return {c, k * theta.x(), k * theta.y(), k * theta.z()};
}

/// Rotation vector of a unit quaternion (inverse of quat_exp), shortest arc.
inline Vec3 quat_log(const Quat& q) {
  Quat p = q.a < 0.0 ? -q : q;
  const Vec3 v = p.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;
  return 2.0 * std::atan2(s, p.a) / s * v;
}

inline Quat quat_from_axis_angle(const Vec3& axis, double angle) {
  return quat_exp(axis.normalized() * angle);
}

/// Geodesic angle of the rotation represented by q, in [0, pi].
inline double rotation_angle(const Quat& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.a));
}

/**
 * One explicit Euler step q + qdot * dt followed by division by the
 * Euclidean norm.
 */
inline Quat quat_integrate(const Quat& q, const Quat& qdot, double dt) {
  Quat next = normalized(q + qdot * dt);
  if (!next.is_finite()) throw Error(ErrorKind::NonFiniteState, "quaternion integration produced a non-finite value");
  return next;
}

/// Constant-rate body-frame attitude propagation q * exp(omega * dt).
inline Quat propagate_body_rate(const Quat& q, const Vec3& omega, double dt) {
  Quat next = normalized(quat_mul(q, quat_exp(omega * dt)));
  if (!next.is_finite()) throw Error(ErrorKind::NonFiniteState, "attitude propagation produced a non-finite value");
  return next;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  /// Set when |pitch| is within 1e-6 of pi/2; roll is then reported as 0.
  bool gimbal_lock = false;

  Vec3 as_vector() const { return {roll, pitch, yaw}; }
};

/// Intrinsic Z-Y-X angles: R_q = Rz(yaw) Ry(pitch) Rx(roll).
inline EulerAngles euler_from_quat(const Quat& q) {
  const Mat3 r = quat_to_rotmat(q);
  EulerAngles e;
  e.pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  if (std::abs(std::abs(e.pitch) - std::numbers::pi / 2.0) < 1e-6) {
    e.gimbal_lock = true;
    e.roll = 0.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
  }
  return e;
}

inline Quat quat_from_euler(double roll, double pitch, double yaw) {
  const Quat qx = quat_from_axis_angle(Vec3::UnitX(), roll);
  const Quat qy = quat_from_axis_angle(Vec3::UnitY(), pitch);
  const Quat qz = quat_from_axis_angle(Vec3::UnitZ(), yaw);
  return normalized(qz * qy * qx);
}

}  // namespace ahrs

#endif  // AHRS_SO3_HPP_

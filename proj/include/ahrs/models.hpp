#ifndef AHRS_MODELS_HPP_
#define AHRS_MODELS_HPP_

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "ahrs/error.hpp"
#include "ahrs/so3.hpp"

namespace ahrs {

/// Filter state: attitude {E}->{B} and gyro bias (rad/s).
struct AttState {
  Quat q;
  Vec3 omega_b = Vec3::Zero();
};

/// One IMU record: gyro (rad/s), accelerometer (m/s^2), magnetometer
/// (normalized flux), all expressed in the body frame.
struct ImuSample {
  double t = 0.0;
  Vec3 omega_m = Vec3::Zero();
  Vec3 y_a = Vec3::Zero();
  Vec3 y_b = Vec3::Zero();
};

/**
 * @brief Noise and reference configuration shared by the simulator, the
 * gain synthesis and every filter.
 *
 * Q is the covariance of w = (w_gyro, w_bias); R the covariance of
 * nu = (nu_accel, nu_mag). g_e and b_e are the gravity and magnetic
 * references in {E}; dt is the nominal sample period.
 */
struct NoiseConfig {
  Mat6 Q = 0.1 * Mat6::Identity();
  Mat6 R = default_R();
  Vec3 g_e{0.0, 0.0, 9.81};
  Vec3 b_e{1.0, 0.0, 0.0};
  double dt = 0.005;

  static Mat6 default_R() {
    Mat6 r = Mat6::Zero();
    r.topLeftCorner<3, 3>() = 0.3 * Mat3::Identity();
    r.bottomRightCorner<3, 3>() = 0.5 * Mat3::Identity();
    return r;
  }

  Mat3 Q_gyro() const { return Q.topLeftCorner<3, 3>(); }
  Mat3 Q_bias() const { return Q.bottomRightCorner<3, 3>(); }
  Mat3 R_accel() const { return R.topLeftCorner<3, 3>(); }
  Mat3 R_mag() const { return R.bottomRightCorner<3, 3>(); }

  /// Throws InvalidConfig on the first violated invariant. The simulator
  /// accepts a singular (e.g. zero) R; estimators need it definite.
  void validate(bool require_definite_R = true) const {
    auto check_cov = [](const Mat6& m, const char* name, bool definite) {
      if (!m.allFinite()) throw Error(ErrorKind::InvalidConfig, std::string(name) + " has non-finite entries");
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorKind::InvalidConfig, std::string(name) + " is not symmetric");
      const double min_eig = Eigen::SelfAdjointEigenSolver<Mat6>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      if (min_eig < -1e-12)
        throw Error(ErrorKind::InvalidConfig, std::string(name) + " has a negative eigenvalue", min_eig);
      if (definite && min_eig <= 0.0)
        throw Error(ErrorKind::InvalidConfig, std::string(name) + " is not positive definite", min_eig);
    };
    check_cov(Q, "Q", false);
    check_cov(R, "R", require_definite_R);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidConfig, "dt must be positive");
    if (!g_e.allFinite() || !(g_e.norm() > 0.0)) throw Error(ErrorKind::InvalidConfig, "g_e must be non-zero");
    if (!b_e.allFinite() || !(b_e.norm() > 0.0)) throw Error(ErrorKind::InvalidConfig, "b_e must be non-zero");
  }
};

struct Measurements {
  Vec3 y_a = Vec3::Zero();
  Vec3 y_b = Vec3::Zero();
};

/// Stacked cross-product output error (e_g, e_b).
struct OutputError {
  Vec3 e_g = Vec3::Zero();
  Vec3 e_b = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 e;
    e << e_g, e_b;
    return e;
  }
};

/// Element (q0, omega_b0) of SU(2) x R^3.
struct GroupElement {
  Quat q0;
  Vec3 omega_b0 = Vec3::Zero();
};

/// y_a_hat = -R^T g_e, y_b_hat = R^T b_e.
inline Measurements predict_measurements(const Quat& q_hat, const NoiseConfig& cfg) {
  const Mat3 rt = quat_to_rotmat(q_hat).transpose();
  return {-rt * cfg.g_e, rt * cfg.b_e};
}

// Both output errors use the order y_hat x y. Gains built by the Riccati
// pipeline carry the matching sign.

/// Body-frame output error (y_a_hat x y_a, y_b_hat x y_b).
inline OutputError output_error_left(const ImuSample& y, const Measurements& y_hat) {
  return {y_hat.y_a.cross(y.y_a), y_hat.y_b.cross(y.y_b)};
}

/// Earth-frame output error (R_hat (y_a_hat x y_a), R_hat (y_b_hat x y_b)).
inline OutputError output_error_right(const Quat& q_hat, const ImuSample& y, const Measurements& y_hat) {
  const Mat3 r = quat_to_rotmat(q_hat);
  return {r * y_hat.y_a.cross(y.y_a), r * y_hat.y_b.cross(y.y_b)};
}

/// Result of applying a group action to (state, input, references, outputs).
struct Transformed {
  AttState x;
  Vec3 u = Vec3::Zero();
  NoiseConfig cfg;
  ImuSample y;
};

/**
 * Left action: q -> q0*q, omega_b -> omega_b + omega_b0,
 * omega_m -> omega_m + omega_b0, references rotated by R_q0, outputs unchanged.
 */
inline Transformed apply_left_action(const GroupElement& g, const AttState& x, const Vec3& u,
                                     const NoiseConfig& cfg, const ImuSample& y) {
  const Mat3 r0 = quat_to_rotmat(g.q0);
  Transformed out{{quat_mul(g.q0, x.q), x.omega_b + g.omega_b0}, u + g.omega_b0, cfg, y};
  out.cfg.g_e = r0 * cfg.g_e;
  out.cfg.b_e = r0 * cfg.b_e;
  out.y.omega_m = y.omega_m + g.omega_b0;
  return out;
}

/**
 * Right action: q -> q*q0, omega_b -> R_q0^T omega_b + omega_b0,
 * omega_m -> R_q0^T omega_m + omega_b0, outputs rotated by R_q0^T,
 * references unchanged.
 */
inline Transformed apply_right_action(const GroupElement& g, const AttState& x, const Vec3& u,
                                      const NoiseConfig& cfg, const ImuSample& y) {
  const Mat3 r0t = quat_to_rotmat(g.q0).transpose();
  Transformed out{{quat_mul(x.q, g.q0), r0t * x.omega_b + g.omega_b0}, r0t * u + g.omega_b0, cfg, y};
  out.y.omega_m = r0t * y.omega_m + g.omega_b0;
  out.y.y_a = r0t * y.y_a;
  out.y.y_b = r0t * y.y_b;
  return out;
}

/// Group product g1 <> g2 for the left action, so that
/// apply_left(g1, apply_left(g2, .)) == apply_left(g1 <> g2, .).
inline GroupElement compose_left(const GroupElement& g1, const GroupElement& g2) {
  return {quat_mul(g1.q0, g2.q0), g1.omega_b0 + g2.omega_b0};
}

/// Group product for the right action (order reverses on the quaternion).
inline GroupElement compose_right(const GroupElement& g1, const GroupElement& g2) {
  return {quat_mul(g2.q0, g1.q0), quat_to_rotmat(g1.q0).transpose() * g2.omega_b0 + g1.omega_b0};
}

/// Noiseless kinematics: qdot = 1/2 q*(omega_m - omega_b), bias constant.
struct StateDerivative {
  Quat q_dot;
  Vec3 omega_b_dot = Vec3::Zero();
};

inline StateDerivative state_derivative(const AttState& x, const Vec3& omega_m) {
  return {quat_mul(x.q, Quat::pure(omega_m - x.omega_b)) * 0.5, Vec3::Zero()};
}

}  // namespace ahrs

#endif  // AHRS_MODELS_HPP_

#ifndef AHRS_FILTERS_WAHBA_HPP_
#define AHRS_FILTERS_WAHBA_HPP_

#include <numbers>
#include <span>

#include "ahrs/filters/common.hpp"

namespace ahrs::filters {

/// Body-frame observation of a known earth-frame reference direction.
struct WahbaObservation {
  Vec3 body = Vec3::Zero();
  Vec3 reference = Vec3::Zero();
  double weight = 1.0;
};

/**
 * @brief SVD solution of Wahba's problem.
 *
 * Finds the rotation A = R^T minimizing sum w_i |y_i - A r_i|^2 via
 * B = sum w_i y_i r_i^T = U S V^T, A = U diag(1, 1, det U det V) V^T, and
 * returns the quaternion of R = A^T (body to earth).
 */
inline Quat solve_wahba(std::span<const WahbaObservation> obs) {
  Mat3 B = Mat3::Zero();
  for (const auto& o : obs) B += o.weight * o.body * o.reference.transpose();
  if (!B.allFinite()) throw Error(ErrorKind::NonFiniteState, "non-finite Wahba observations");
  Eigen::JacobiSVD<Mat3> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  const Vec3 d(1.0, 1.0, U.determinant() * V.determinant());
  const Mat3 A = U * d.asDiagonal() * V.transpose();
  return quat_from_rotmat(A.transpose());
}

/// Default weights are the inverse traces of the accelerometer and
/// magnetometer noise covariances.
struct WahbaWeights {
  double w_a = 0.0;
  double w_b = 0.0;

  static WahbaWeights from_noise(const NoiseConfig& cfg) {
    return {1.0 / cfg.R_accel().trace(), 1.0 / cfg.R_mag().trace()};
  }
};

/**
 * @brief Memoryless two-vector attitude from one accelerometer and one
 * magnetometer sample. Throws DegenerateGeometry when the two directions are
 * parallel to within 1e-6 rad (or either is zero).
 */
inline Quat wahba_attitude(const Vec3& y_a, const Vec3& y_b, const NoiseConfig& cfg, const WahbaWeights& w) {
  const double na = y_a.norm(), nb = y_b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "zero-length observation");
  const double angle = std::atan2(y_a.cross(y_b).norm(), y_a.dot(y_b));
  if (angle < 1e-6 || std::numbers::pi - angle < 1e-6)
    throw Error(ErrorKind::DegenerateGeometry, "accelerometer and magnetometer directions are parallel", angle);
  const WahbaObservation obs[] = {{y_a, -cfg.g_e, w.w_a}, {y_b, cfg.b_e, w.w_b}};
  return solve_wahba(obs);
}

/// WAB filter step: attitude from the current sample only, no bias estimate.
inline StepOutput step_wab(FilterState& s, const ImuSample& u, const NoiseConfig& cfg, const WahbaWeights& w) {
  s.x_hat.q = wahba_attitude(u.y_a, u.y_b, cfg, w);
  s.x_hat.omega_b.setZero();
  s.t = u.t;
  detail::require_finite(s, u.t);
  const OutputError e = output_error_left(u, predict_measurements(s.x_hat.q, cfg));
  return detail::make_output(s, e, std::nullopt);
}

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_WAHBA_HPP_

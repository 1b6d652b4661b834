#ifndef AHRS_FILTERS_INVARIANT_EKF_HPP_
#define AHRS_FILTERS_INVARIANT_EKF_HPP_

#include "ahrs/filters/common.hpp"
#include "ahrs/riccati.hpp"

namespace ahrs::filters {

namespace detail {

/// Discrete Kalman cycle on the 6-dim error state: predict P with (A_d, Q_d),
/// then gain K = P C^T (C P C^T + R_d)^-1 and P <- (I - K C) P, symmetrized.
inline Mat6 kalman_cycle(Mat6& P, const riccati::DiscreteSystem& sys) {
  P = sys.A_d * P * sys.A_d.transpose() + sys.Q_d;
  const Mat6 S = sys.C * P * sys.C.transpose() + sys.R_d;
  Eigen::LDLT<Mat6> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw Error(ErrorKind::SingularInnovation, "innovation covariance is not invertible");
  const Mat6 K = (ldlt.solve(sys.C * P)).transpose();
  P = (Mat6::Identity() - K * sys.C) * P;
  P = 0.5 * (P + P.transpose());
  return K;
}

}  // namespace detail

/**
 * @brief LIEKF* step (left-invariant EKF with body-frame cross-product error).
 *
 * A = [[[w_b - w_m]x, -I/2], [0, 0]]; C and N use the references rotated
 * into the body frame by the predicted attitude.
 */
inline StepOutput step_liekf_star(FilterState& s, const ImuSample& u, const NoiseConfig& cfg, double dt) {
  detail::require_positive_dt(dt);
  if (!s.P) throw Error(ErrorKind::MissingGains, "LIEKF* state has no covariance");
  AttState& x = s.x_hat;
  const Vec3 rate = u.omega_m - x.omega_b;

  x.q = propagate_body_rate(x.q, rate, dt);
  const Mat3 rt = quat_to_rotmat(x.q).transpose();
  riccati::ErrorJacobians j = riccati::right_invariant_jacobians(rt * cfg.g_e, rt * cfg.b_e);
  j.A.topLeftCorner<3, 3>() = -skew(rate);
  const Mat6 K = detail::kalman_cycle(*s.P, riccati::discretize(j, cfg.Q, cfg.R, dt));

  const OutputError e = output_error_left(u, predict_measurements(x.q, cfg));
  detail::correct_left(x, K, e);
  s.K_current = K;
  s.t = u.t;
  detail::require_finite(s, u.t);
  return detail::make_output(s, e, K);
}

/**
 * @brief RIEKF* step (right-invariant EKF with earth-frame cross-product
 * error). Only the bias block of A varies, through I_w = R_hat (w_m - w_b).
 */
inline StepOutput step_riekf_star(FilterState& s, const ImuSample& u, const NoiseConfig& cfg, double dt) {
  detail::require_positive_dt(dt);
  if (!s.P) throw Error(ErrorKind::MissingGains, "RIEKF* state has no covariance");
  AttState& x = s.x_hat;
  const Vec3 rate = u.omega_m - x.omega_b;
  const Vec3 invariant_rate = quat_rotate(x.q, rate);

  const auto sys = riccati::discretize(riccati::right_invariant_jacobians(cfg.g_e, cfg.b_e, invariant_rate), cfg.Q,
                                       cfg.R, dt);
  x.q = propagate_body_rate(x.q, rate, dt);
  const Mat6 K = detail::kalman_cycle(*s.P, sys);

  const OutputError e = output_error_right(x.q, u, predict_measurements(x.q, cfg));
  detail::correct_right(x, K, e, 1.0);
  s.K_current = K;
  s.t = u.t;
  detail::require_finite(s, u.t);
  return detail::make_output(s, e, K);
}

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_INVARIANT_EKF_HPP_

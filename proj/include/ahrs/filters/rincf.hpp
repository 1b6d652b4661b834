#ifndef AHRS_FILTERS_RINCF_HPP_
#define AHRS_FILTERS_RINCF_HPP_

#include "ahrs/filters/common.hpp"
#include "ahrs/riccati.hpp"

namespace ahrs::filters {

/**
 * @brief Right-invariant nonlinear complementary filter with constant gain.
 *
 * K is the per-sample gain designed for the nominal period cfg.dt; a step of
 * length dt applies K * dt / cfg.dt.
 */
inline StepOutput step_rincf(FilterState& s, const ImuSample& u, const Mat6& K, const NoiseConfig& cfg, double dt) {
  detail::require_positive_dt(dt);
  AttState& x = s.x_hat;
  x.q = propagate_body_rate(x.q, u.omega_m - x.omega_b, dt);
  const OutputError e = output_error_right(x.q, u, predict_measurements(x.q, cfg));
  detail::correct_right(x, K, e, dt / cfg.dt);
  s.K_current = K;
  s.t = u.t;
  detail::require_finite(s, u.t);
  return detail::make_output(s, e, std::nullopt);
}

/**
 * @brief RINCF with the bias rows of the gain modulated by the invariant
 * rate I_w = R_hat (omega_m - omega_b_hat). The mask is re-applied after
 * modulation. With I_w = 0 this is exactly step_rincf.
 */
inline StepOutput step_rincf2(FilterState& s, const ImuSample& u, const riccati::GainMatrix& gain,
                              const riccati::Rincf2Params& p, const NoiseConfig& cfg, double dt) {
  detail::require_positive_dt(dt);
  AttState& x = s.x_hat;
  const Vec3 rate = u.omega_m - x.omega_b;
  x.q = propagate_body_rate(x.q, rate, dt);
  const Mat6 K = riccati::apply_mask(riccati::modulate_gain(gain.K, p, quat_rotate(x.q, rate)), gain.mask);
  const OutputError e = output_error_right(x.q, u, predict_measurements(x.q, cfg));
  detail::correct_right(x, K, e, dt / cfg.dt);
  s.K_current = K;
  s.t = u.t;
  detail::require_finite(s, u.t);
  return detail::make_output(s, e, K);
}

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_RINCF_HPP_

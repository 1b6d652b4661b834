#ifndef AHRS_FILTERS_NCF_HPP_
#define AHRS_FILTERS_NCF_HPP_

#include "ahrs/filters/common.hpp"

namespace ahrs::filters {

/// Complementary filter gains; all must be strictly positive.
struct NcfGains {
  double k_p = 1.0;
  double k_i = 0.1;
  double k_1 = 0.5;
  double k_2 = 0.5;

  void validate() const {
    for (double k : {k_p, k_i, k_1, k_2})
      if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorKind::InvalidGains, "NCF gains must all be positive");
  }
};

/**
 * @brief Nonlinear complementary filter step.
 *
 * E = k1 (y_a_hat x y_a) + k2 (y_b_hat x y_b). The attitude is corrected by
 * q*(-k_p E) and the bias integrates k_i E; with this error order the
 * attitude term needs the minus sign for the positive-gain observer to be
 * stable. The returned OutputError holds the two weighted terms separately
 * (their sum is E).
 */
inline StepOutput step_ncf(FilterState& s, const ImuSample& u, const NcfGains& g, const NoiseConfig& cfg,
                           double dt) {
  detail::require_positive_dt(dt);
  AttState& x = s.x_hat;
  x.q = propagate_body_rate(x.q, u.omega_m - x.omega_b, dt);
  const Measurements y_hat = predict_measurements(x.q, cfg);
  const OutputError weighted{g.k_1 * y_hat.y_a.cross(u.y_a), g.k_2 * y_hat.y_b.cross(u.y_b)};
  const Vec3 e = weighted.e_g + weighted.e_b;
  x.q = quat_integrate(x.q, quat_mul(x.q, Quat::pure(-g.k_p * e)), dt);
  x.omega_b += g.k_i * e * dt;
  s.t = u.t;
  detail::require_finite(s, u.t);
  return detail::make_output(s, weighted, std::nullopt);
}

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_NCF_HPP_

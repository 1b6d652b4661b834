#ifndef AHRS_FILTERS_FILTER_BANK_HPP_
#define AHRS_FILTERS_FILTER_BANK_HPP_

#include <optional>

#include "ahrs/filters/common.hpp"
#include "ahrs/filters/ekf.hpp"
#include "ahrs/filters/invariant_ekf.hpp"
#include "ahrs/filters/ncf.hpp"
#include "ahrs/filters/rincf.hpp"
#include "ahrs/filters/wahba.hpp"
#include "ahrs/riccati.hpp"

namespace ahrs::filters {

/// Whatever a filter kind needs beyond the noise configuration.
struct FilterGains {
  std::optional<riccati::GainMatrix> K;       // RINCF, RINCF2
  std::optional<NcfGains> ncf;                // NCF
  std::optional<riccati::Rincf2Params> rincf2;  // RINCF2
  std::optional<WahbaWeights> wahba;          // WAB; defaults from R when absent
};

/// Identity attitude, zero bias, P = I where the filter carries a covariance.
inline FilterState init(FilterKind kind, const NoiseConfig& cfg, const FilterGains& gains = {}) {
  cfg.validate();
  FilterState s;
  s.kind = kind;
  switch (kind) {
    case FilterKind::NCF:
      if (!gains.ncf) throw Error(ErrorKind::MissingGains, "NCF needs k_p, k_i, k_1, k_2");
      gains.ncf->validate();
      break;
    case FilterKind::RINCF2:
      if (!gains.rincf2) throw Error(ErrorKind::MissingGains, "RINCF2 needs p1, p2");
      [[fallthrough]];
    case FilterKind::RINCF:
      if (!gains.K) throw Error(ErrorKind::MissingGains, to_string(kind) + " needs a gain matrix");
      if (!gains.K->K.allFinite()) throw Error(ErrorKind::InvalidGains, "gain matrix has non-finite entries");
      s.K_current = gains.K->masked();
      break;
    case FilterKind::LIEKF_STAR:
    case FilterKind::RIEKF_STAR:
      s.P = Mat6::Identity();
      break;
    case FilterKind::EKF:
      s.P_ekf = Mat7::Identity();
      break;
    case FilterKind::WAB:
      break;
  }
  return s;
}

/**
 * @brief A filter kind bound to its configuration and gains, with the
 * shared step(sample, dt) interface.
 */
class Filter {
 public:
  Filter(FilterKind kind, NoiseConfig cfg, FilterGains gains = {})
      : cfg_(std::move(cfg)), gains_(std::move(gains)), state_(init(kind, cfg_, gains_)) {
    if (gains_.K) masked_K_ = gains_.K->masked();
    wahba_ = gains_.wahba.value_or(WahbaWeights::from_noise(cfg_));
  }

  FilterKind kind() const { return state_.kind; }
  const FilterState& state() const { return state_; }
  const NoiseConfig& config() const { return cfg_; }

  /// Overrides the estimate (used for perfect initialization).
  void reset(const AttState& x, double t = 0.0) {
    state_.x_hat = x;
    state_.x_hat.q = normalized(x.q);
    state_.t = t;
  }

  /// Output for the initial state, without stepping.
  StepOutput current(const ImuSample& u) const {
    const OutputError e = state_.kind == FilterKind::LIEKF_STAR || state_.kind == FilterKind::EKF ||
                                  state_.kind == FilterKind::WAB || state_.kind == FilterKind::NCF
                              ? output_error_left(u, predict_measurements(state_.x_hat.q, cfg_))
                              : output_error_right(state_.x_hat.q, u, predict_measurements(state_.x_hat.q, cfg_));
    return detail::make_output(state_, e, std::nullopt);
  }

  StepOutput step(const ImuSample& u, double dt) {
    switch (state_.kind) {
      case FilterKind::NCF: return step_ncf(state_, u, *gains_.ncf, cfg_, dt);
      case FilterKind::LIEKF_STAR: return step_liekf_star(state_, u, cfg_, dt);
      case FilterKind::RIEKF_STAR: return step_riekf_star(state_, u, cfg_, dt);
      case FilterKind::RINCF: return step_rincf(state_, u, masked_K_, cfg_, dt);
      case FilterKind::RINCF2: return step_rincf2(state_, u, *gains_.K, *gains_.rincf2, cfg_, dt);
      case FilterKind::EKF: return step_ekf(state_, u, cfg_, dt);
      case FilterKind::WAB: return step_wab(state_, u, cfg_, wahba_);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown filter kind");
  }

 private:
  NoiseConfig cfg_;
  FilterGains gains_;
  FilterState state_;
  Mat6 masked_K_ = Mat6::Zero();
  WahbaWeights wahba_;
};

/// Gains every filter kind needs under the given noise configuration:
/// DARE gain (with mask) for RINCF/RINCF2, default NCF gains, and RINCF2
/// parameters for `omega_max`.
inline FilterGains default_gains(const NoiseConfig& cfg, const riccati::GainMask& mask = {},
                                 double omega_max = std::numbers::pi / 3,
                                 riccati::IndexConvention conv = riccati::IndexConvention::RowCol) {
  FilterGains g;
  const auto sol = riccati::solve_dare(riccati::build_discrete_system(cfg));
  g.K = riccati::GainMatrix{sol.K, mask};
  g.ncf = NcfGains{};
  g.rincf2 = riccati::compute_rincf2_params(cfg, omega_max, conv);
  return g;
}

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_FILTER_BANK_HPP_

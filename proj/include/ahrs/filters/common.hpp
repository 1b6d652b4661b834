#ifndef AHRS_FILTERS_COMMON_HPP_
#define AHRS_FILTERS_COMMON_HPP_

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "ahrs/error.hpp"
#include "ahrs/models.hpp"
#include "ahrs/so3.hpp"

namespace ahrs::filters {

using Mat7 = Eigen::Matrix<double, 7, 7>;

enum class FilterKind { NCF, LIEKF_STAR, RIEKF_STAR, RINCF, RINCF2, EKF, WAB };

inline constexpr FilterKind kAllFilters[] = {FilterKind::NCF,   FilterKind::LIEKF_STAR, FilterKind::RIEKF_STAR,
                                             FilterKind::RINCF, FilterKind::RINCF2,     FilterKind::EKF,
                                             FilterKind::WAB};

inline std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::NCF: return "NCF";
    case FilterKind::LIEKF_STAR: return "LIEKF*";
    case FilterKind::RIEKF_STAR: return "RIEKF*";
    case FilterKind::RINCF: return "RINCF";
    case FilterKind::RINCF2: return "RINCF2";
    case FilterKind::EKF: return "EKF";
    case FilterKind::WAB: return "WAB";
  }
  return "?";
}

/// Accepts the display names and lowercase spellings such as "riekf_star".
inline FilterKind parse_filter_kind(std::string_view name) {
  std::string n;
  for (char ch : name) {
    if (ch == '*') {
      n += "_star";
    } else if (ch != '-' && ch != ' ') {
      n += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  if (n == "ncf") return FilterKind::NCF;
  if (n == "liekf_star" || n == "liekfstar") return FilterKind::LIEKF_STAR;
  if (n == "riekf_star" || n == "riekfstar") return FilterKind::RIEKF_STAR;
  if (n == "rincf") return FilterKind::RINCF;
  if (n == "rincf2") return FilterKind::RINCF2;
  if (n == "ekf") return FilterKind::EKF;
  if (n == "wab" || n == "wahba") return FilterKind::WAB;
  throw Error(ErrorKind::InvalidConfig, "unknown filter '" + std::string(name) + "'");
}

/// True for filters whose gain changes every step (gain traces are recorded).
inline bool has_adaptive_gain(FilterKind k) {
  return k == FilterKind::LIEKF_STAR || k == FilterKind::RIEKF_STAR || k == FilterKind::RINCF2;
}

/**
 * Mutable per-filter state. P is present for LIEKF* and RIEKF*, P_ekf for
 * the additive EKF; K_current holds the last gain applied.
 */
struct FilterState {
  FilterKind kind = FilterKind::RINCF;
  AttState x_hat;
  std::optional<Mat6> P;
  std::optional<Mat7> P_ekf;
  Mat6 K_current = Mat6::Zero();
  double t = 0.0;
};

struct StepOutput {
  AttState x_hat;
  OutputError error;
  std::optional<Mat6> gain;
  EulerAngles euler;
};

namespace detail {

inline void require_positive_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidConfig, "step dt must be positive");
}

inline void require_finite(const FilterState& s, double t) {
  if (!s.x_hat.q.is_finite() || !s.x_hat.omega_b.allFinite() || (s.P && !s.P->allFinite()) ||
      (s.P_ekf && !s.P_ekf->allFinite()))
    throw Error(ErrorKind::NonFiniteState, "filter state became non-finite at t=" + std::to_string(t), t);
}

inline StepOutput make_output(const FilterState& s, const OutputError& e, std::optional<Mat6> gain) {
  return {s.x_hat, e, std::move(gain), euler_from_quat(s.x_hat.q)};
}

/// Right-invariant correction: q <- (v)*q, omega_b <- omega_b + R^T w.
inline void correct_right(AttState& x, const Mat6& K, const OutputError& e, double scale) {
  const Vec6 delta = scale * (K * e.stacked());
  const Mat3 r = quat_to_rotmat(x.q);
  x.q = quat_integrate(x.q, quat_mul(Quat::pure(delta.head<3>()), x.q), 1.0);
  x.omega_b += r.transpose() * delta.tail<3>();
}

/// Left-invariant correction: q <- q*(v), omega_b <- omega_b + w.
inline void correct_left(AttState& x, const Mat6& K, const OutputError& e) {
  const Vec6 delta = K * e.stacked();
  x.q = quat_integrate(x.q, quat_mul(x.q, Quat::pure(delta.head<3>())), 1.0);
  x.omega_b += delta.tail<3>();
}

}  // namespace detail

}  // namespace ahrs::filters

#endif  // AHRS_FILTERS_COMMON_HPP_

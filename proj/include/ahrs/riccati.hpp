#ifndef AHRS_RICCATI_HPP_
#define AHRS_RICCATI_HPP_

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ahrs/error.hpp"
#include "ahrs/models.hpp"
#include "ahrs/so3.hpp"

namespace ahrs::riccati {

/**
 * Discretized right-invariant error model used for steady-state gain
 * synthesis: A_d = I + A dt, Q_d = M Q M^T dt^2, R_d = N R N^T.
 */
struct DiscreteSystem {
  Mat6 A_d = Mat6::Identity();
  Mat6 C = Mat6::Zero();
  Mat6 Q_d = Mat6::Zero();
  Mat6 R_d = Mat6::Identity();
};

/// Continuous-time Jacobians of the right-invariant error system.
struct ErrorJacobians {
  Mat6 A = Mat6::Zero();
  Mat6 C = Mat6::Zero();
  Mat6 M = Mat6::Zero();
  Mat6 N = Mat6::Zero();
};

/**
 * A = [[0, -I/2], [0, [I_w]x]], C = [[2[g_e]x^2, 0], [2[b_e]x^2, 0]],
 * M = diag(I/2, -I), N = diag(I + [g_e]x, I - [b_e]x).
 *
 * `invariant_rate` is I_w = R_hat (omega_m - omega_b_hat); it is zero for
 * the steady-state design.
 */
inline ErrorJacobians right_invariant_jacobians(const Vec3& g_e, const Vec3& b_e,
                                                const Vec3& invariant_rate = Vec3::Zero()) {
  ErrorJacobians j;
  j.A.topRightCorner<3, 3>() = -0.5 * Mat3::Identity();
  j.A.bottomRightCorner<3, 3>() = skew(invariant_rate);
  const Mat3 sg = skew(g_e);
  const Mat3 sb = skew(b_e);
  j.C.topLeftCorner<3, 3>() = 2.0 * sg * sg;
  j.C.bottomLeftCorner<3, 3>() = 2.0 * sb * sb;
  j.M.topLeftCorner<3, 3>() = 0.5 * Mat3::Identity();
  j.M.bottomRightCorner<3, 3>() = -Mat3::Identity();
  j.N.topLeftCorner<3, 3>() = Mat3::Identity() + sg;
  j.N.bottomRightCorner<3, 3>() = Mat3::Identity() - sb;
  return j;
}

inline DiscreteSystem discretize(const ErrorJacobians& j, const Mat6& Q, const Mat6& R, double dt) {
  DiscreteSystem sys;
  sys.A_d = Mat6::Identity() + j.A * dt;
  sys.C = j.C;
  sys.Q_d = j.M * Q * j.M.transpose() * dt * dt;
  sys.R_d = j.N * R * j.N.transpose();
  return sys;
}

inline DiscreteSystem build_discrete_system(const NoiseConfig& cfg, const Vec3& invariant_rate = Vec3::Zero()) {
  cfg.validate();
  DiscreteSystem sys = discretize(right_invariant_jacobians(cfg.g_e, cfg.b_e, invariant_rate), cfg.Q, cfg.R, cfg.dt);
  Eigen::LLT<Mat6> llt(sys.R_d);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularN, "N R N^T is not positive definite");
  return sys;
}

template <int N, int M>
struct DareSolution {
  Eigen::Matrix<double, N, N> P;  // steady-state a priori covariance
  Eigen::Matrix<double, N, M> K;  // P C^T (C P C^T + R)^-1
  double residual = 0.0;          // ||Ric(P) - P||_F for the returned P
  int iterations = 0;
};

namespace detail {

template <int N, int M>
Eigen::Matrix<double, M, M> innovation_inverse(const Eigen::Matrix<double, N, N>& P,
                                               const Eigen::Matrix<double, M, N>& C,
                                               const Eigen::Matrix<double, M, M>& R) {
  const Eigen::Matrix<double, M, M> S = C * P * C.transpose() + R;
  Eigen::LDLT<Eigen::Matrix<double, M, M>> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-300)
    throw Error(ErrorKind::SingularInnovation, "C P C^T + R is not invertible");
  return ldlt.solve(Eigen::Matrix<double, M, M>::Identity());
}

/// One step of the a priori Riccati recursion.
template <int N, int M>
Eigen::Matrix<double, N, N> riccati_map(const Eigen::Matrix<double, N, N>& P, const Eigen::Matrix<double, N, N>& A,
                                        const Eigen::Matrix<double, M, N>& C,
                                        const Eigen::Matrix<double, N, N>& Q,
                                        const Eigen::Matrix<double, M, M>& R) {
  const Eigen::Matrix<double, N, M> APCt = A * P * C.transpose();
  Eigen::Matrix<double, N, N> next = A * P * A.transpose() - APCt * innovation_inverse<N, M>(P, C, R) * APCt.transpose() + Q;
  return 0.5 * (next + next.transpose());
}

}  // namespace detail

/**
 * @brief Solves P = A P A^T - A P C^T (C P C^T + R)^-1 C P A^T + Q by
 * fixed-point iteration of the Riccati recursion.
 *
 * Iterates from P0 until ||P_{k+1} - P_k||_F <= tol. Throws NoConvergence
 * (value = last residual) after max_iter iterations.
 */
template <int N, int M>
DareSolution<N, M> solve_dare(const Eigen::Matrix<double, N, N>& A, const Eigen::Matrix<double, M, N>& C,
                              const Eigen::Matrix<double, N, N>& Q, const Eigen::Matrix<double, M, M>& R,
                              double tol = 1e-12, int max_iter = 200000,
                              const Eigen::Matrix<double, N, N>& P0 = Eigen::Matrix<double, N, N>::Identity()) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "DARE tolerance must be positive");
  Eigen::Matrix<double, N, N> P = P0;
  int it = 0;
  while (it < max_iter) {
    Eigen::Matrix<double, N, N> next = detail::riccati_map<N, M>(P, A, C, Q, R);
    ++it;
    const double step = (next - P).norm();
    P = next;
    if (!P.allFinite()) throw Error(ErrorKind::NoConvergence, "Riccati iteration diverged", step);
    if (step <= tol) break;
  }
  const double residual = (detail::riccati_map<N, M>(P, A, C, Q, R) - P).norm();
  if (residual > tol)
    throw Error(ErrorKind::NoConvergence, "DARE did not converge in " + std::to_string(max_iter) + " iterations",
                residual);
  DareSolution<N, M> sol;
  sol.P = P;
  sol.K = P * C.transpose() * detail::innovation_inverse<N, M>(P, C, R);
  sol.residual = residual;
  sol.iterations = it;
  return sol;
}

inline DareSolution<6, 6> solve_dare(const DiscreteSystem& sys, double tol = 1e-12, int max_iter = 200000) {
  return solve_dare<6, 6>(sys.A_d, sys.C, sys.Q_d, sys.R_d, tol, max_iter);
}

/**
 * @brief Set of (row, col) gain entries forced to zero, 1-based.
 */
class GainMask {
 public:
  GainMask() = default;
  GainMask(std::initializer_list<std::pair<int, int>> entries) {
    for (const auto& [r, c] : entries) add(r, c);
  }

  void add(int row, int col) {
    if (row < 1 || row > 6 || col < 1 || col > 6)
      throw Error(ErrorKind::IndexOutOfRange,
                  "mask entry (" + std::to_string(row) + "," + std::to_string(col) + ") outside 1..6");
    entries_.insert({row, col});
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool contains(int row, int col) const { return entries_.count({row, col}) != 0; }
  const std::set<std::pair<int, int>>& entries() const { return entries_; }

  /// Attitude rows see the magnetometer only through yaw; bias rows likewise.
  /// Matches the experimental selective-update pattern for g_e || e3, b_e || e1.
  static GainMask selective_magnetometer() { return {{1, 4}, {2, 5}, {3, 3}, {4, 4}, {5, 5}, {6, 3}}; }

 private:
  std::set<std::pair<int, int>> entries_;
};

inline Mat6 apply_mask(const Mat6& K, const GainMask& mask) {
  Mat6 out = K;
  for (const auto& [r, c] : mask.entries()) out(r - 1, c - 1) = 0.0;
  return out;
}

/// Kalman gain with its zero mask. Rows 1-3 act on attitude, rows 4-6 on
/// the bias; the gain multiplies the y_hat x y output error directly.
struct GainMatrix {
  Mat6 K = Mat6::Zero();
  GainMask mask;

  Mat6 masked() const { return apply_mask(K, mask); }
};

/// Observer gain L = -K acting on the y x y_hat form of the output error.
inline Mat6 observer_gain(const Mat6& K) { return -K; }

struct StructuredGains {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 c = Vec3::Zero();
  Vec3 d = Vec3::Zero();
  double offdiag_residual = 0.0;  // Frobenius norm of the block off-diagonals
  double diag_norm = 0.0;         // Frobenius norm of the block diagonals
};

/**
 * Reads K as [[I_a, I_b], [-I_c, -I_d]] with diagonal blocks. Feed it the
 * observer gain (observer_gain(K_dare)) to obtain the positive parameter
 * set of a stable design.
 */
inline StructuredGains extract_structured_gains(const Mat6& K) {
  StructuredGains s;
  const Mat3 k11 = K.topLeftCorner<3, 3>(), k12 = K.topRightCorner<3, 3>();
  const Mat3 k21 = K.bottomLeftCorner<3, 3>(), k22 = K.bottomRightCorner<3, 3>();
  s.a = k11.diagonal();
  s.b = k12.diagonal();
  s.c = -k21.diagonal();
  s.d = -k22.diagonal();
  double off = 0.0, diag = 0.0;
  for (const Mat3* blk : {&k11, &k12, &k21, &k22}) {
    const Mat3 dpart = blk->diagonal().asDiagonal();
    off += (*blk - dpart).squaredNorm();
    diag += dpart.squaredNorm();
  }
  s.offdiag_residual = std::sqrt(off);
  s.diag_norm = std::sqrt(diag);
  return s;
}

/// How the two-index gain references K_{i,j} for the high-rate terms are read.
enum class IndexConvention {
  RowCol,  // K_{6,2} is row 6, column 2 (default)
  ColRow,  // K_{6,2} is column 6, row 2
};

struct Rincf2Params {
  double p1 = 0.0;
  double p2 = 0.0;
  double omega_max = 1.0;  // rad/s
};

/**
 * Re-solves the DARE with I_w = (omega_max, 0, 0) and reads
 * p1 = K_{6,2} / omega_max, p2 = -K_{5,6} / omega_max.
 * Entries below 1e-12 in magnitude are treated as zero.
 */
inline Rincf2Params compute_rincf2_params(const NoiseConfig& cfg, double omega_max,
                                          IndexConvention conv = IndexConvention::RowCol, double tol = 1e-12,
                                          int max_iter = 200000) {
  if (!(omega_max > 0.0)) throw Error(ErrorKind::InvalidConfig, "omega_max must be positive");
  const auto sol = solve_dare(build_discrete_system(cfg, Vec3(omega_max, 0.0, 0.0)), tol, max_iter);
  auto entry = [&](int i, int j) {
    const double v = conv == IndexConvention::RowCol ? sol.K(i - 1, j - 1) : sol.K(j - 1, i - 1);
    return std::abs(v) < 1e-12 ? 0.0 : v;
  };
  return {entry(6, 2) / omega_max, -entry(5, 6) / omega_max, omega_max};
}

/**
 * Bias rows of the gain modulated by the invariant rate I_w:
 * K_bias = K_bias_static + [p1 [I_w]x, p2 [I_w]x]. Attitude rows unchanged.
 */
inline Mat6 modulate_gain(const Mat6& K, const Rincf2Params& p, const Vec3& invariant_rate) {
  Mat6 out = K;
  const Mat3 s = skew(invariant_rate);
  out.bottomLeftCorner<3, 3>() += p.p1 * s;
  out.bottomRightCorner<3, 3>() += p.p2 * s;
  return out;
}

/// Everything the `tune` pipeline reports.
struct TuneReport {
  Mat6 K = Mat6::Zero();  // masked steady-state gain
  StructuredGains params;
  std::vector<Rincf2Params> rincf2;
  double residual = 0.0;
  int iterations = 0;
};

inline TuneReport tune(const NoiseConfig& cfg, const GainMask& mask = {}, const std::vector<double>& omega_max = {},
                       IndexConvention conv = IndexConvention::RowCol, double tol = 1e-12, int max_iter = 200000) {
  const auto sol = solve_dare(build_discrete_system(cfg), tol, max_iter);
  TuneReport r;
  r.K = apply_mask(sol.K, mask);
  r.params = extract_structured_gains(observer_gain(r.K));
  r.residual = sol.residual;
  r.iterations = sol.iterations;
  for (double w : omega_max) r.rincf2.push_back(compute_rincf2_params(cfg, w, conv, tol, max_iter));
  return r;
}

}  // namespace ahrs::riccati

#endif  // AHRS_RICCATI_HPP_

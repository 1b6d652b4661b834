#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ahrs/riccati.hpp"

using namespace ahrs;
using namespace ahrs::riccati;

namespace {

// Time-varying filter recursion in measurement-update form, independent of
// the solver's a priori map.
Mat6 recursion_gain(const DiscreteSystem& s, int steps, double p0) {
  Mat6 P = p0 * Mat6::Identity();
  Mat6 K = Mat6::Zero();
  for (int k = 0; k < steps; ++k) {
    const Mat6 S = s.C * P * s.C.transpose() + s.R_d;
    K = P * s.C.transpose() * S.inverse();
    const Mat6 Pu = (Mat6::Identity() - K * s.C) * P;
    P = s.A_d * Pu * s.A_d.transpose() + s.Q_d;
    P = 0.5 * (P + P.transpose());
  }
  return K;
}

Mat6 random_psd_near(const Mat6& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat6 E;
  for (int i = 0; i < 36; ++i) E.data()[i] = u(rng);
  return base + 0.02 * base.norm() * E * E.transpose() / 6.0;
}

}  // namespace

TEST(DiscreteSystem, OutputMatrixForUnitGravity) {
  NoiseConfig cfg;
  cfg.g_e = {0, 0, 1};
  const DiscreteSystem s = build_discrete_system(cfg);
  Mat3 expected = Mat3::Zero();
  expected.diagonal() << -2, -2, 0;
  EXPECT_LE((s.C.topLeftCorner<3, 3>() - expected).norm(), 1e-15);
  EXPECT_TRUE(s.C.rightCols<3>().isZero(0.0));
}

TEST(DiscreteSystem, ZeroProcessNoise) {
  NoiseConfig cfg;
  cfg.Q.setZero();
  EXPECT_TRUE(build_discrete_system(cfg).Q_d.isZero(0.0));
}

TEST(DiscreteSystem, BlocksFromDefinition) {
  NoiseConfig cfg;
  const DiscreteSystem s = build_discrete_system(cfg);
  EXPECT_NEAR(s.A_d(0, 3), -0.5 * cfg.dt, 1e-18);
  EXPECT_TRUE((s.A_d.bottomRightCorner<3, 3>().isIdentity(0.0)));
  // M Q M^T dt^2 with M = diag(I/2, -I) and Q = 0.1 I.
  EXPECT_NEAR(s.Q_d(0, 0), 0.25 * 0.1 * cfg.dt * cfg.dt, 1e-20);
  EXPECT_NEAR(s.Q_d(4, 4), 0.1 * cfg.dt * cfg.dt, 1e-20);
  EXPECT_NEAR(s.Q_d(0, 3), 0.0, 1e-20);
}

TEST(DiscreteSystem, NoiseShapingFullRank) {
  // det(I + [v]x) = 1 + |v|^2
  const ErrorJacobians j = right_invariant_jacobians({0, 0, 1}, {1, 0, 0});
  EXPECT_NEAR((j.N.topLeftCorner<3, 3>().determinant()), 2.0, 1e-15);
  EXPECT_NEAR((j.N.bottomRightCorner<3, 3>().determinant()), 2.0, 1e-15);
}

TEST(DiscreteSystem, InvalidConfigRejected) {
  NoiseConfig cfg;
  cfg.R.setZero();
  EXPECT_THROW(build_discrete_system(cfg), Error);
}

TEST(Dare, ScalarGoldenRatio) {
  using M1 = Eigen::Matrix<double, 1, 1>;
  const auto sol = solve_dare<1, 1>(M1::Ones(), M1::Ones(), M1::Ones(), M1::Ones());
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(sol.P(0, 0), phi, 1e-10);
  EXPECT_NEAR(sol.K(0, 0), phi / (phi + 1.0), 1e-10);
  EXPECT_NEAR(sol.K(0, 0), 0.61803, 1e-5);
}

TEST(Dare, ZeroProcessNoiseFixedPoint) {
  NoiseConfig cfg;
  cfg.Q.setZero();
  const DiscreteSystem s = build_discrete_system(cfg);
  const auto sol = solve_dare<6, 6>(s.A_d, s.C, s.Q_d, s.R_d, 1e-12, 10, Mat6::Zero());
  EXPECT_TRUE(sol.P.isZero(0.0));
  EXPECT_TRUE(sol.K.isZero(0.0));
}

TEST(Dare, ResidualSymmetryDefiniteness) {
  const auto sol = solve_dare(build_discrete_system(NoiseConfig{}));
  EXPECT_LE(sol.residual, 1e-12);
  EXPECT_LE((sol.P - sol.P.transpose()).norm(), 1e-10);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat6>(sol.P).eigenvalues().minCoeff(), -1e-10);
}

TEST(Dare, MatchesLongRecursion) {
  std::mt19937_64 rng(3);
  const DiscreteSystem base = build_discrete_system(NoiseConfig{});
  for (int trial = 0; trial < 3; ++trial) {
    DiscreteSystem s = base;
    s.Q_d = random_psd_near(base.Q_d, rng);
    s.R_d = random_psd_near(base.R_d, rng);
    const auto sol = solve_dare(s);
    EXPECT_LE((sol.K - recursion_gain(s, 100000, 100.0)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Dare, NoConvergenceReportsResidual) {
  try {
    solve_dare(build_discrete_system(NoiseConfig{}), 1e-12, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
    EXPECT_GT(e.value(), 1e-12);
  }
}

TEST(Dare, SingularInnovation) {
  using M1 = Eigen::Matrix<double, 1, 1>;
  try {
    solve_dare<1, 1>(M1::Ones(), M1::Ones(), M1::Zero(), M1::Zero(), 1e-12, 10, M1::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularInnovation);
  }
}

TEST(Dare, LargerMeasurementNoiseShrinksAttitudeGains) {
  const DiscreteSystem s = build_discrete_system(NoiseConfig{});
  DiscreteSystem s10 = s;
  s10.R_d *= 10.0;
  const Mat6 K = solve_dare(s).K, K10 = solve_dare(s10).K;
  int checked = 0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(K(i, i)) < 1e-12) continue;
    EXPECT_LT(std::abs(K10(i, i)), std::abs(K(i, i)));
    ++checked;
  }
  EXPECT_GE(checked, 2);
}

TEST(Dare, AlignedReferencesGiveDiagonalBlocks) {
  const Mat6 K = solve_dare(build_discrete_system(NoiseConfig{})).K;
  const StructuredGains p = extract_structured_gains(K);
  EXPECT_LE(p.offdiag_residual, 0.01 * p.diag_norm);
}

TEST(StructuredGains, IdentityMatrix) {
  const StructuredGains p = extract_structured_gains(Mat6::Identity());
  EXPECT_EQ(p.a, Vec3::Ones());
  EXPECT_EQ(p.d, -Vec3::Ones());
  EXPECT_EQ(p.b, Vec3::Zero());
  EXPECT_EQ(p.offdiag_residual, 0.0);
}

TEST(StructuredGains, DefaultDesignPositive) {
  const StructuredGains p = extract_structured_gains(observer_gain(solve_dare(build_discrete_system(NoiseConfig{})).K));
  for (double v : {p.a[0], p.a[1], p.b[1], p.b[2], p.c[0], p.c[1], p.d[1], p.d[2]}) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1e-2);
  }
}

TEST(Mask, EmptyAllAndRange) {
  const Mat6 K = Mat6::Random();
  EXPECT_EQ(apply_mask(K, {}), K);
  GainMask all;
  for (int r = 1; r <= 6; ++r)
    for (int c = 1; c <= 6; ++c) all.add(r, c);
  EXPECT_TRUE(apply_mask(K, all).isZero(0.0));
  try {
    GainMask m{{7, 1}};
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IndexOutOfRange);
  }
  EXPECT_THROW(GainMask({{0, 3}}), Error);
}

TEST(Mask, SelectivePatternOnlyTouchesListedEntries) {
  const Mat6 K = Mat6::Constant(1.0);
  const auto mask = GainMask::selective_magnetometer();
  const Mat6 Km = apply_mask(K, mask);
  for (int r = 1; r <= 6; ++r)
    for (int c = 1; c <= 6; ++c) EXPECT_EQ(Km(r - 1, c - 1), mask.contains(r, c) ? 0.0 : 1.0);
  EXPECT_EQ(mask.size(), 6u);
}

TEST(Tune, MaskedEntriesExactlyZero) {
  const auto mask = GainMask::selective_magnetometer();
  const TuneReport r = tune(NoiseConfig{}, mask, {std::numbers::pi / 3});
  for (const auto& [row, col] : mask.entries()) EXPECT_EQ(r.K(row - 1, col - 1), 0.0);
  ASSERT_EQ(r.rincf2.size(), 1u);
  EXPECT_LE(r.residual, 1e-12);
  EXPECT_GT(r.iterations, 0);
}

TEST(Rincf2, StaticLimitStaysFinite) {
  const Rincf2Params p = compute_rincf2_params(NoiseConfig{}, 1e-9);
  EXPECT_TRUE(std::isfinite(p.p1));
  EXPECT_TRUE(std::isfinite(p.p2));
  EXPECT_LT(std::abs(p.p1) + std::abs(p.p2), 1.0);
}

TEST(Rincf2, SignsAcrossBenchmarkRates) {
  // p2 keeps its sign over the three rates; p1 crosses zero between the first two.
  const double pi = std::numbers::pi;
  for (double w : {pi / 3, 2 * pi / 3, 5 * pi / 3}) {
    const Rincf2Params p = compute_rincf2_params(NoiseConfig{}, w);
    const Mat6 K = recursion_gain(build_discrete_system(NoiseConfig{}, Vec3(w, 0, 0)), 100000, 100.0);
    EXPECT_GT(p.p2, 0.0) << w;
    EXPECT_EQ(std::signbit(p.p1), std::signbit(K(5, 1))) << w;
    EXPECT_EQ(std::signbit(p.p2), std::signbit(-K(4, 5))) << w;
    EXPECT_NEAR(p.p1, K(5, 1) / w, 1e-8);
  }
  EXPECT_LT(compute_rincf2_params(NoiseConfig{}, pi / 3).p1, 0.0);
  EXPECT_GT(compute_rincf2_params(NoiseConfig{}, 2 * pi / 3).p1, 0.0);
}

TEST(Rincf2, ReadsTheDocumentedEntries) {
  NoiseConfig cfg;
  const double w = 1.3;
  const Mat6 K = solve_dare(build_discrete_system(cfg, Vec3(w, 0, 0))).K;
  const Rincf2Params rc = compute_rincf2_params(cfg, w, IndexConvention::RowCol);
  const Rincf2Params cr = compute_rincf2_params(cfg, w, IndexConvention::ColRow);
  EXPECT_DOUBLE_EQ(rc.p1, K(5, 1) / w);
  EXPECT_DOUBLE_EQ(rc.p2, -K(4, 5) / w);
  EXPECT_DOUBLE_EQ(cr.p1, std::abs(K(1, 5)) < 1e-12 ? 0.0 : K(1, 5) / w);
  EXPECT_THROW(compute_rincf2_params(cfg, 0.0), Error);
}

TEST(Rincf2, ModulationTouchesBiasRowsOnly) {
  const Mat6 K = apply_mask(Mat6::Constant(0.5), GainMask::selective_magnetometer());
  const Rincf2Params p{0.2, -0.3, 1.0};
  const Vec3 w(0.4, -0.1, 0.7);
  const Mat6 Km = modulate_gain(K, p, w);
  EXPECT_EQ(Km.topRows<3>(), K.topRows<3>());
  EXPECT_LE((Km.bottomLeftCorner<3, 3>() - K.bottomLeftCorner<3, 3>() - 0.2 * skew(w)).norm(), 1e-15);
  EXPECT_LE((Km.bottomRightCorner<3, 3>() - K.bottomRightCorner<3, 3>() + 0.3 * skew(w)).norm(), 1e-15);
  EXPECT_EQ(modulate_gain(K, p, Vec3::Zero()), K);
}

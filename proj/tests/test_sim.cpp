#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ahrs/sim.hpp"

using namespace ahrs;
using sim::SimRun;
using sim::TrajectoryCase;

namespace {

SimRun noiseless(double duration = 2.0) {
  SimRun r;
  r.duration = duration;
  r.cfg.Q.setZero();
  r.cfg.R.setZero();
  return r;
}

double quat_gap(const Quat& a, const Quat& b) {
  return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

}  // namespace

TEST(OmegaProfile, CaseOneAtZero) {
  const Vec3 w = sim::omega_profile(TrajectoryCase::benchmark(1), 0.0);
  EXPECT_NEAR(w.x(), std::numbers::pi / 3 * std::sin(std::numbers::pi / 3), 1e-15);
  EXPECT_NEAR(w.x(), 0.90690, 1e-5);
  EXPECT_NEAR(w.y(), 0.0, 1e-15);
  EXPECT_NEAR(w.z(), 0.0, 1e-15);
}

TEST(OmegaProfile, CaseTwoAtZero) {
  const Vec3 w = sim::omega_profile(TrajectoryCase::benchmark(2), 0.0);
  EXPECT_NEAR(w.x(), 0.0, 1e-15);
  EXPECT_NEAR(w.y(), 0.0, 1e-15);
  EXPECT_NEAR(w.z(), 2.7207, 1e-4);
}

TEST(OmegaProfile, CaseThreeAmplitude) {
  const TrajectoryCase c = TrajectoryCase::benchmark(3);
  EXPECT_NEAR(c.omega_max(), 5 * std::numbers::pi / 3, 1e-15);
  double peak = 0.0;
  for (double t = 0.0; t < 1.0 / 0.07; t += 1e-3) peak = std::max(peak, std::abs(sim::omega_profile(c, t).x()));
  EXPECT_NEAR(peak, 5.236, 1e-3);
}

TEST(Trajectory, InvalidCases) {
  EXPECT_THROW(TrajectoryCase::benchmark(4), Error);
  EXPECT_THROW(TrajectoryCase::custom({{{1.0, -1.0, 0.0}, {}, {}}}), Error);
}

TEST(Truth, ZeroRateKeepsAttitude) {
  SimRun r = noiseless();
  r.initial_q = quat_from_euler(0.1, 0.2, 0.3);
  const auto truth = sim::integrate_truth(TrajectoryCase::custom({}), r);
  EXPECT_LE(quat_gap(truth.back().q_true, r.initial_q), 1e-15);
}

TEST(Truth, ConstantYawRateClosedForm) {
  SimRun r = noiseless(std::numbers::pi);
  r.dt = std::numbers::pi / 1000;
  const auto truth = sim::integrate_truth(TrajectoryCase::custom({{{}, {}, {1.0, 0.0, std::numbers::pi / 2}}}), r);
  ASSERT_EQ(truth.size(), 1001u);
  EXPECT_NEAR(rotation_angle(truth.back().q_true), std::numbers::pi, 1e-6);
  EXPECT_NEAR(std::abs(truth.back().q_true.d), 1.0, 1e-6);
}

TEST(Truth, Rk4FourthOrder) {
  const TrajectoryCase c = TrajectoryCase::benchmark(3);
  auto final_q = [&](double dt) {
    SimRun r = noiseless(1.0);
    r.dt = dt;
    return sim::integrate_truth(c, r).back().q_true;
  };
  const Quat ref = final_q(1e-4);
  const double e1 = quat_gap(final_q(0.02), ref);
  const double e2 = quat_gap(final_q(0.01), ref);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(Truth, UnitNormEverywhere) {
  const auto truth = sim::integrate_truth(TrajectoryCase::benchmark(2), SimRun{});
  for (const auto& rec : truth) ASSERT_NEAR(rec.q_true.norm(), 1.0, 1e-12);
}

TEST(Synthesis, NoiselessIdentityAttitude) {
  SimRun r = noiseless();
  const auto res = sim::simulate(TrajectoryCase::custom({}), r);
  for (const auto& s : res.samples) {
    EXPECT_EQ(s.omega_m, Vec3::Zero());
    EXPECT_EQ(s.y_a, Vec3(0, 0, -9.81));
    EXPECT_EQ(s.y_b, Vec3(1, 0, 0));
  }
}

TEST(Synthesis, NoiselessGyroIsDeltaAngle) {
  const auto res = sim::simulate(TrajectoryCase::benchmark(1), noiseless());
  EXPECT_EQ(res.samples[0].omega_m, res.truth[0].omega_true);
  for (std::size_t k = 1; k < res.samples.size(); ++k) {
    const Quat next = propagate_body_rate(res.truth[k - 1].q_true, res.samples[k].omega_m, 0.005);
    ASSERT_LE(quat_gap(next, res.truth[k].q_true), 1e-13);
    const Vec3 mid = sim::omega_profile(TrajectoryCase::benchmark(1), res.samples[k].t - 0.0025);
    ASSERT_LE((res.samples[k].omega_m - mid).norm(), 1e-4);
  }
}

TEST(Synthesis, AccelNoiseVariance) {
  SimRun r;
  r.duration = 500.0;
  r.dt = 0.005;
  r.cfg.Q.setZero();
  const auto res = sim::simulate(TrajectoryCase::custom({}), r);
  ASSERT_GE(res.samples.size(), 100000u);
  Vec3 sum = Vec3::Zero(), sq = Vec3::Zero();
  for (const auto& s : res.samples) {
    const Vec3 n = s.y_a - Vec3(0, 0, -9.81);
    sum += n;
    sq += n.cwiseAbs2();
  }
  const double N = static_cast<double>(res.samples.size());
  const Vec3 var = sq / N - (sum / N).cwiseAbs2();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(var[i], 0.3, 0.05 * 0.3);
}

TEST(Synthesis, GyroNoiseScalesWithRate) {
  SimRun r;
  r.duration = 200.0;
  r.cfg.Q = Mat6::Zero();
  r.cfg.Q.topLeftCorner<3, 3>() = 0.1 * Mat3::Identity();
  const auto res = sim::simulate(TrajectoryCase::custom({}), r);
  double sq = 0.0;
  for (const auto& s : res.samples) sq += s.omega_m.x() * s.omega_m.x();
  EXPECT_NEAR(sq / res.samples.size(), 0.1 / r.dt, 0.05 * 0.1 / r.dt);
}

TEST(Synthesis, SameSeedIsBitIdentical) {
  SimRun r;
  r.duration = 3.0;
  r.seed = 42;
  const auto a = sim::simulate(TrajectoryCase::benchmark(1), r);
  const auto b = sim::simulate(TrajectoryCase::benchmark(1), r);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    ASSERT_EQ(a.samples[k].omega_m, b.samples[k].omega_m);
    ASSERT_EQ(a.samples[k].y_a, b.samples[k].y_a);
    ASSERT_EQ(a.samples[k].y_b, b.samples[k].y_b);
    ASSERT_EQ(a.truth[k].bias_true, b.truth[k].bias_true);
  }
  r.seed = 43;
  const auto c = sim::simulate(TrajectoryCase::benchmark(1), r);
  EXPECT_NE(a.samples[5].y_a, c.samples[5].y_a);
}

// Variance of the integrated bias walk at a fixed time should not depend on dt.
TEST(Synthesis, BiasWalkVarianceIsDtIndependent) {
  auto final_variance = [](double dt) {
    double sq = 0.0;
    const int runs = 400;
    for (int s = 0; s < runs; ++s) {
      SimRun r;
      r.duration = 2.0;
      r.dt = dt;
      r.seed = 1000 + s;
      r.cfg.Q = 0.1 * Mat6::Identity();
      sq += sim::integrate_truth(TrajectoryCase::custom({}), r).back().bias_true.squaredNorm();
    }
    return sq / runs / 3.0;
  };
  const double expected = 0.1 * 2.0;
  EXPECT_NEAR(final_variance(0.01), expected, 0.15 * expected);
  EXPECT_NEAR(final_variance(0.005), expected, 0.15 * expected);
}

TEST(SimRun, Validation) {
  SimRun r;
  r.duration = 0.001;
  EXPECT_THROW(r.validate(), Error);
  SimRun r2;
  r2.initial_q = Quat{2, 0, 0, 0};
  EXPECT_THROW(r2.validate(), Error);
  SimRun r3;
  r3.cfg.R(0, 0) = -1.0;
  EXPECT_THROW(sim::simulate(TrajectoryCase::benchmark(1), r3), Error);
}

TEST(SimRun, RowCount) {
  SimRun r;
  r.duration = 30.0;
  r.dt = 0.005;
  EXPECT_EQ(sim::simulate(TrajectoryCase::benchmark(1), r).samples.size(), 6001u);
}

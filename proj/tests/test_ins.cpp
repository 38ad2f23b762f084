#include <gtest/gtest.h>

#include <vector>

#include <Eigen/Eigenvalues>

#include "rio/ins.hpp"
#include "support.hpp"

namespace rio {
namespace {

const Vec3 kGravity(0.0, 0.0, -9.81);

ImuSample random_imu(std::mt19937_64& rng) {
  ImuSample u;
  u.accel = test::random_vec(rng, 3.0) + Vec3(0.0, 0.0, 9.81);
  u.gyro = test::random_vec(rng, 1.0);
  return u;
}

// Noise vector ordered (n_g, n_a, n_wg, n_wa); noise enters as
// true = measured - bias - n, and the bias walks by n_w dt.
NavState propagate_with_noise(const NavState& x, const ImuSample& u, double dt,
                              const Eigen::Matrix<double, kNoiseDim, 1>& w) {
  ImuSample noisy = u;
  noisy.gyro -= w.segment<3>(0);
  noisy.accel -= w.segment<3>(3);
  NavState out = propagate_nominal(x, noisy, dt, kGravity);
  out.gyro_bias += w.segment<3>(6) * dt;
  out.accel_bias += w.segment<3>(9) * dt;
  return out;
}

TEST(Ins, StateJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const NavState x = test::random_state(rng);
    const ImuSample u = random_imu(rng);
    const double dt = 0.004 + 0.01 * (trial % 5);
    const NavState ref = propagate_nominal(x, u, dt, kGravity);
    const auto numeric = test::numeric_state_jacobian<kErrorDim>(
        x, [&](const NavState& y) { return boxminus(propagate_nominal(y, u, dt, kGravity), ref); });
    EXPECT_LT(test::relative_error(propagation_jacobians(x, u, dt).state, numeric), 1e-4) << "trial " << trial;
  }
}

TEST(Ins, NoiseJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const NavState x = test::random_state(rng);
    const ImuSample u = random_imu(rng);
    const double dt = 0.004;
    const NavState ref = propagate_nominal(x, u, dt, kGravity);
    NoiseJacobian numeric;
    for (int i = 0; i < kNoiseDim; ++i) {
      Eigen::Matrix<double, kNoiseDim, 1> w = Eigen::Matrix<double, kNoiseDim, 1>::Zero();
      w(i) = h;
      numeric.col(i) =
          (boxminus(propagate_with_noise(x, u, dt, w), ref) - boxminus(propagate_with_noise(x, u, dt, -w), ref)) /
          (2.0 * h);
    }
    EXPECT_LT(test::relative_error(propagation_jacobians(x, u, dt).noise, numeric, 1e-3), 1e-4);
  }
}

TEST(Ins, HoverStaysPut) {
  NavState x;
  ImuSample u;
  u.accel = Vec3(0.0, 0.0, 9.81);
  for (int i = 0; i < 1000; ++i) x = propagate_nominal(x, u, 0.004, kGravity);
  EXPECT_LT(x.position.norm(), 1e-12);
  EXPECT_LT(x.velocity.norm(), 1e-12);
  EXPECT_NEAR(x.timestamp, 4.0, 1e-9);
}

TEST(Ins, ConstantAccelerationIsExact) {
  NavState x;
  x.velocity = Vec3(1.0, 0.0, 0.0);
  ImuSample u;
  u.accel = Vec3(0.5, 0.0, 9.81);
  for (int i = 0; i < 250; ++i) x = propagate_nominal(x, u, 0.004, kGravity);
  EXPECT_NEAR(x.position.x(), 1.0 + 0.25, 1e-9);
  EXPECT_NEAR(x.velocity.x(), 1.5, 1e-12);
}

TEST(Ins, RejectsBadSteps) {
  NavState x;
  ImuSample u;
  EXPECT_THROW(propagate_nominal(x, u, 0.0, kGravity), Error);
  EXPECT_THROW(propagate_nominal(x, u, -0.01, kGravity), Error);
  EXPECT_THROW(propagate_nominal(x, u, 0.5, kGravity), Error);
  u.accel.x() = std::nan("");
  EXPECT_THROW(validate(u), Error);
  u.accel = Vec3(400.0, 0.0, 0.0);
  EXPECT_THROW(validate(u), Error);
}

TEST(Ins, CovarianceStaysSymmetricPsd) {
  std::mt19937_64 rng(13);
  NavState x = test::random_state(rng);
  ErrorCovariance p = ErrorCovariance::Identity() * 1e-4;
  ImuNoiseParams q;
  for (int i = 0; i < 500; ++i) {
    const ImuSample u = random_imu(rng);
    p = propagate_covariance(p, x, u, 0.004, q);
    x = propagate_nominal(x, u, 0.004, kGravity);
  }
  EXPECT_TRUE(p.isApprox(p.transpose(), 0.0));
  Eigen::SelfAdjointEigenSolver<ErrorCovariance> eig(p);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
}

TEST(Ins, ZeroNoiseOnlyTransportsCovariance) {
  std::mt19937_64 rng(14);
  const NavState x = test::random_state(rng);
  const ImuSample u = random_imu(rng);
  ImuNoiseParams q;
  q.gyro_noise = q.accel_noise = q.gyro_bias_walk = q.accel_bias_walk = 0.0;
  const ErrorCovariance p = ErrorCovariance::Identity() * 0.01;
  const ErrorCovariance f = propagation_jacobians(x, u, 0.004).state;
  EXPECT_TRUE(propagate_covariance(p, x, u, 0.004, q).isApprox(f * p * f.transpose(), 1e-14));
}

TEST(Ins, BoxminusInvertsBoxplus) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 50; ++i) {
    const NavState x = test::random_state(rng);
    ErrorVector d;
    for (int k = 0; k < kErrorDim; ++k) d(k) = test::random_vec(rng, 0.5)(0);
    EXPECT_LT((boxminus(boxplus(x, d), x) - d).norm(), 1e-10);
  }
}

TEST(Ins, InjectRejectsNonFinite) {
  ErrorVector d = ErrorVector::Zero();
  d(4) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(inject_and_reset(NavState{}, ErrorCovariance::Identity(), d), Error);
}

TEST(Ins, RpyRoundTrip) {
  const Vec3 rpy(0.1, -0.3, 2.5);
  EXPECT_TRUE(to_rpy(from_rpy(rpy.x(), rpy.y(), rpy.z())).isApprox(rpy, 1e-12));
}

std::vector<ImuSample> static_window(const Rotation& attitude, const Vec3& gyro_bias, std::size_t n) {
  std::vector<ImuSample> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i].timestamp = 0.004 * static_cast<double>(i);
    w[i].accel = attitude.inverse() * -kGravity;
    w[i].gyro = gyro_bias;
  }
  return w;
}

TEST(Ins, InitializeLevel) {
  const auto w = static_window(Rotation::identity(), Vec3::Zero(), 100);
  const auto [x, p] = initialize(w, std::nullopt, std::nullopt, ImuNoiseParams{}, InitOptions{});
  EXPECT_TRUE(x.attitude.matrix().isIdentity(1e-12));
  EXPECT_TRUE(x.velocity.isZero(0.0));
  EXPECT_NEAR(p(0, 0), 0.02 * 0.02, 1e-15);
}

TEST(Ins, InitializeAlignsSpecificForceWithGravity) {
  std::vector<ImuSample> w = static_window(Rotation::identity(), Vec3::Zero(), 100);
  const Vec3 mean(0.0, 9.81 * std::sin(0.1), 9.81 * std::cos(0.1));
  for (auto& u : w) u.accel = mean;
  const auto [x, p] = initialize(w, std::nullopt, std::nullopt, ImuNoiseParams{}, InitOptions{});
  EXPECT_TRUE((x.attitude * mean).normalized().isApprox(-kGravity.normalized(), 1e-12));
  const Vec3 rpy = to_rpy(x.attitude);
  EXPECT_NEAR(rpy.x(), 0.1, 1e-12);
  EXPECT_NEAR(rpy.y(), 0.0, 1e-12);
}

TEST(Ins, InitializeRecoversTiltAndHeading) {
  const Rotation truth = from_rpy(0.1, -0.05, 0.7);
  const Vec3 bias(0.001, -0.002, 0.0005);
  const auto w = static_window(truth, bias, 100);
  const auto [x, p] = initialize(w, Vec3(1.0, 0.0, 0.0), ExternalPose{Vec3(1, 2, 3), 0.7}, ImuNoiseParams{},
                                 InitOptions{});
  EXPECT_LT(log_so3(truth.inverse() * x.attitude).norm(), 1e-12);
  EXPECT_TRUE(x.gyro_bias.isApprox(bias, 1e-12));
  EXPECT_TRUE(x.position.isApprox(Vec3(1, 2, 3)));
  EXPECT_TRUE(x.velocity.isApprox(truth * Vec3(1.0, 0.0, 0.0), 1e-12));
  EXPECT_EQ(x.timestamp, w.back().timestamp);
}

TEST(Ins, InitializeRejectsMotionAndShortWindows) {
  auto w = static_window(Rotation::identity(), Vec3::Zero(), 100);
  EXPECT_THROW(initialize(std::span(w).first(10), std::nullopt, std::nullopt, ImuNoiseParams{}, InitOptions{}),
               Error);
  for (auto& u : w) u.accel *= 1.5;
  EXPECT_THROW(initialize(w, std::nullopt, std::nullopt, ImuNoiseParams{}, InitOptions{}), Error);
}

}  // namespace
}  // namespace rio

#include <gtest/gtest.h>

#include "rio/radar.hpp"
#include "support.hpp"

namespace rio {
namespace {

RadarPoint point_towards(const Vec3& dir, double range, double doppler) {
  return RadarPoint::from_cartesian(dir.normalized() * range, doppler, 20.0);
}

TEST(Radar, SphericalRoundTrip) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = test::random_vec(rng, 50.0);
    EXPECT_TRUE(RadarPoint::from_cartesian(p).position().isApprox(p, 1e-12));
  }
}

TEST(Radar, CovarianceOnXAxisIsRangeOnly) {
  RadarPoint pt;
  pt.range = 10.0;
  RadarNoiseParams n;
  n.sigma_azimuth = n.sigma_elevation = 0.0;
  const Mat3 cov = point_covariance(pt, n);
  Mat3 expected = Mat3::Zero();
  expected(0, 0) = n.sigma_range * n.sigma_range;
  EXPECT_TRUE(cov.isApprox(expected, 1e-15));
}

TEST(Radar, CovarianceMatchesMonteCarlo) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g(0.0, 1.0);
  RadarPoint pt;
  pt.range = 60.0;
  pt.azimuth = 0.4;
  pt.elevation = -0.3;
  RadarNoiseParams n;
  const int samples = 200000;
  Vec3 mean = Vec3::Zero();
  Mat3 second = Mat3::Zero();
  for (int i = 0; i < samples; ++i) {
    RadarPoint q = pt;
    q.range += n.sigma_range * g(rng);
    q.azimuth += n.sigma_azimuth * g(rng);
    q.elevation += n.sigma_elevation * g(rng);
    const Vec3 p = q.position();
    mean += p;
    second += p * p.transpose();
  }
  mean /= samples;
  const Mat3 cov = second / samples - mean * mean.transpose();
  EXPECT_LT((cov - point_covariance(pt, n)).norm() / point_covariance(pt, n).norm(), 0.02);
}

TEST(Radar, StaticPlatformResidualIsMinusDoppler) {
  const NavState x;
  RadarNoiseParams n;
  const RadarPoint pt = point_towards(Vec3(1.0, 0.2, -0.5), 30.0, 0.7);
  const DopplerResidual r = doppler_residual(pt, x, Vec3::Zero(), n);
  EXPECT_DOUBLE_EQ(r.residual, -0.7);
  EXPECT_DOUBLE_EQ(r.variance, n.sigma_doppler * n.sigma_doppler);
}

TEST(Radar, ExactDopplerGivesZeroResidual) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 20; ++i) {
    const NavState x = test::random_state(rng);
    const Vec3 gyro = test::random_vec(rng, 0.5);
    const Vec3 omega = gyro - x.gyro_bias;
    const Vec3 v_radar =
        x.ext_rotation.inverse() * (x.attitude.inverse() * x.velocity + omega.cross(x.ext_translation));
    const Vec3 dir = test::random_vec(rng, 1.0).normalized();
    const RadarPoint pt = point_towards(dir, 40.0, dir.dot(v_radar));
    EXPECT_NEAR(doppler_residual(pt, x, gyro, RadarNoiseParams{}).residual, 0.0, 1e-12);
  }
}

TEST(Radar, DopplerJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    const NavState x = test::random_state(rng);
    const Vec3 gyro = test::random_vec(rng, 0.5);
    const RadarPoint pt = point_towards(test::random_vec(rng, 1.0), 40.0, 3.0);
    const DopplerResidual r = doppler_residual(pt, x, gyro, RadarNoiseParams{}, true);
    const auto numeric = test::numeric_state_jacobian<1>(x, [&](const NavState& y) {
      return Eigen::Matrix<double, 1, 1>(doppler_residual(pt, y, gyro, RadarNoiseParams{}, true).residual);
    });
    EXPECT_LT(test::relative_error(r.h, numeric), 1e-4) << "trial " << trial;
  }
}

TEST(Radar, FrozenExtrinsicsLeaveBlocksEmpty) {
  std::mt19937_64 rng(25);
  const NavState x = test::random_state(rng);
  const DopplerResidual r = doppler_residual(point_towards(Vec3(1, 1, 1), 10, 1), x, Vec3(0.1, 0, 0), {}, false);
  EXPECT_TRUE(r.h.segment<6>(idx::kExtRot).isZero(0.0));
}

TEST(Radar, DirectionNoiseVarianceMatchesMonteCarlo) {
  // The direction term k^T (omega^ N) Sigma (omega^ N)^T k is the first-order
  // spread of d^T k when the direction is perturbed on the sphere.
  NavState x;
  x.velocity = Vec3(8.0, -3.0, 1.0);
  RadarNoiseParams n;
  n.sigma_doppler = 0.0;
  RadarPoint pt = point_towards(Vec3(0.5, 0.8, -0.4), 30.0, 0.0);
  const double predicted = doppler_residual(pt, x, Vec3::Zero(), n).variance;
  std::mt19937_64 rng(26);
  std::normal_distribution<double> g(0.0, 1.0);
  const Direction dir(pt.direction());
  double sum = 0.0, sum2 = 0.0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const Vec2 xi(n.sigma_azimuth * g(rng), n.sigma_elevation * g(rng));
    const Vec3 d = exp_so3(dir.noise_map() * xi) * dir.vector();
    const double v = d.dot(x.velocity);
    sum += v;
    sum2 += v * v;
  }
  const double var = sum2 / samples - (sum / samples) * (sum / samples);
  EXPECT_NEAR(var / predicted, 1.0, 0.02);
}

RadarScan consistent_scan(const Vec3& v_radar, int n, std::mt19937_64& rng) {
  RadarScan scan;
  for (int i = 0; i < n; ++i) {
    Vec3 dir = test::random_vec(rng, 1.0);
    dir.x() = std::abs(dir.x()) + 0.3;
    dir.normalize();
    scan.points.push_back(point_towards(dir, 50.0, dir.dot(v_radar)));
  }
  return scan;
}

TEST(Radar, GateRejectsSingleInjectedOutlier) {
  std::mt19937_64 rng(27);
  NavState x;
  x.velocity = Vec3(5.0, 1.0, 0.0);
  RadarScan scan = consistent_scan(x.velocity, 50, rng);
  RadarNoiseParams n;
  scan.points[17].doppler += 10.0 * n.sigma_doppler;
  const auto res = gate_doppler(scan, x, ErrorCovariance::Zero(), Vec3::Zero(), n);
  ASSERT_EQ(res.outliers.size(), 1u);
  EXPECT_EQ(res.outliers[0], 17u);
  EXPECT_EQ(res.inliers.size(), 49u);
  EXPECT_FALSE(res.skip_update);
}

TEST(Radar, GateSkipsUpdateWhenEverythingIsRejected) {
  std::mt19937_64 rng(28);
  NavState x;
  RadarScan scan = consistent_scan(Vec3(20.0, 0.0, 0.0), 10, rng);
  const auto res = gate_doppler(scan, x, ErrorCovariance::Zero(), Vec3::Zero(), RadarNoiseParams{});
  EXPECT_TRUE(res.inliers.empty());
  EXPECT_TRUE(res.skip_update);
}

TEST(Radar, StateCovarianceWidensGate) {
  std::mt19937_64 rng(29);
  NavState x;
  RadarScan scan = consistent_scan(Vec3(0.5, 0.0, 0.0), 20, rng);
  ErrorCovariance p = ErrorCovariance::Zero();
  p.block<3, 3>(idx::kVel, idx::kVel) = Mat3::Identity();
  DopplerGateOptions with, without;
  without.include_state_covariance = false;
  EXPECT_EQ(gate_doppler(scan, x, p, Vec3::Zero(), {}, with).inliers.size(), 20u);
  EXPECT_LT(gate_doppler(scan, x, p, Vec3::Zero(), {}, without).inliers.size(), 20u);
}

TEST(Radar, DopplerUpdateRecoversVelocity) {
  std::mt19937_64 rng(30);
  NavState truth;
  truth.velocity = Vec3(6.0, -2.0, 0.5);
  RadarScan scan = consistent_scan(truth.velocity, 200, rng);
  NavState x = truth;
  x.velocity += Vec3(0.3, -0.2, 0.1);
  ErrorCovariance p = ErrorCovariance::Identity() * 1e-2;
  p.block<3, 3>(idx::kVel, idx::kVel) = Mat3::Identity();
  const auto gate = gate_doppler(scan, x, p, Vec3::Zero(), RadarNoiseParams{});
  const auto [post, post_p] = doppler_update(x, p, gate.inlier_residuals);
  // Dopplers see the body-frame velocity; attitude and velocity share the correction.
  EXPECT_LT((post.attitude.inverse() * post.velocity - truth.velocity).norm(), 0.02);
  EXPECT_LT(post_p(idx::kVel, idx::kVel), p(idx::kVel, idx::kVel));
  const auto [same, same_p] = doppler_update(x, p, {});
  EXPECT_EQ(same.velocity, x.velocity);
}

TEST(Ransac, RecoversVelocityWithOutliers) {
  std::mt19937_64 rng(31);
  const Vec3 v(4.0, -1.5, 0.8);
  RadarScan scan = consistent_scan(v, 200, rng);
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& p : scan.points) p.doppler += g(rng);
  for (int i = 0; i < 40; ++i) scan.points[i * 5].doppler += 3.0;
  const auto est = ransac_ego_velocity(scan.points);
  ASSERT_TRUE(est.has_value());
  EXPECT_LT((est->velocity - v).norm(), 0.05);
  int flagged = 0;
  for (int i = 0; i < 40; ++i) flagged += est->inliers[i * 5] ? 0 : 1;
  EXPECT_EQ(flagged, 40);
}

TEST(Ransac, DegenerateGeometryReturnsNothing) {
  RadarScan scan;
  for (int i = 0; i < 20; ++i) scan.points.push_back(point_towards(Vec3(1.0, 0.1 * i, 0.0), 20.0, 1.0));
  EXPECT_FALSE(ransac_ego_velocity(scan.points).has_value());
  EXPECT_FALSE(ransac_ego_velocity(std::span(scan.points).first(2)).has_value());
}

TEST(Ransac, DeterministicForSeed) {
  std::mt19937_64 rng(32);
  RadarScan scan = consistent_scan(Vec3(1, 2, 3), 100, rng);
  for (int i = 0; i < 30; ++i) scan.points[i * 3].doppler -= 2.0;
  const auto a = ransac_ego_velocity(scan.points);
  const auto b = ransac_ego_velocity(scan.points);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->velocity, b->velocity);
  EXPECT_EQ(a->inliers, b->inliers);
}

}  // namespace
}  // namespace rio

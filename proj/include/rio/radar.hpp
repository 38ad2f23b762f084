#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rio/ins.hpp"
#include "rio/update.hpp"

namespace rio {

/// One radar detection in spherical coordinates. Azimuth is measured from
/// the radar x axis towards y, elevation from the xy plane towards z.
struct RadarPoint {
  double range = 0.0;      // m
  double azimuth = 0.0;    // rad
  double elevation = 0.0;  // rad
  double doppler = 0.0;    // m/s, projection of ego velocity on the ray for static targets
  double snr = 0.0;        // dB

  Vec3 position() const;
  Vec3 direction() const;

  /// Spherical coordinates of a Cartesian radar-frame point.
  static RadarPoint from_cartesian(const Vec3& p, double doppler = 0.0, double snr = 0.0);
};

struct RadarScan {
  double timestamp = 0.0;
  std::vector<RadarPoint> points;
};

struct RadarNoiseParams {
  double sigma_range = 0.1;                 // m
  double sigma_azimuth = 0.5 * M_PI / 180;  // rad
  double sigma_elevation = 0.5 * M_PI / 180;
  double sigma_doppler = 0.1;  // m/s
};

/// Cartesian covariance of a detection, radar frame: J diag(sr^2, sa^2, se^2) J^T.
Mat3 point_covariance(const RadarPoint& pt, const RadarNoiseParams& n);

using RowJacobian = Eigen::Matrix<double, 1, kErrorDim>;

struct DopplerResidual {
  double residual = 0.0;  // predicted - measured, m/s
  RowJacobian h = RowJacobian::Zero();
  double variance = 0.0;  // (m/s)^2
};

/// Doppler residual of one detection. `gyro` is the raw angular rate of the
/// IMU sample closest to the scan; the state's gyro bias is removed here.
DopplerResidual doppler_residual(const RadarPoint& pt, const NavState& x, const Vec3& gyro,
                                 const RadarNoiseParams& n, bool estimate_extrinsics = false);

struct DopplerGateOptions {
  double sigma_multiplier = 3.0;
  /// Add H P H^T to the sensor variance in the gate.
  bool include_state_covariance = true;
  bool estimate_extrinsics = false;
};

struct DopplerGateResult {
  std::vector<std::size_t> inliers;
  std::vector<std::size_t> outliers;
  std::vector<DopplerResidual> inlier_residuals;  // aligned with `inliers`
  /// Set when no inlier remains; the caller must skip the Doppler update.
  bool skip_update = false;
};

DopplerGateResult gate_doppler(const RadarScan& scan, const NavState& x, const ErrorCovariance& p,
                               const Vec3& gyro, const RadarNoiseParams& n, const DopplerGateOptions& options = {});

/// Single batched ESKF update over all Doppler inliers.
std::pair<NavState, ErrorCovariance> doppler_update(const NavState& x, const ErrorCovariance& p,
                                                    std::span<const DopplerResidual> residuals,
                                                    bool estimate_extrinsics = false, bool joseph_form = false);

struct RansacOptions {
  double inlier_threshold = 0.2;  // m/s
  double confidence = 0.99;
  int min_iterations = 17;
  int max_iterations = 500;
  std::uint64_t seed = 1;
};

struct EgoVelocity {
  Vec3 velocity;  // radar frame, m/s
  std::vector<bool> inliers;
};

/// Radar ego velocity from radial Doppler by 3-point RANSAC followed by a
/// least-squares refit on the consensus set. Returns nullopt when the
/// detection directions do not span R^3.
std::optional<EgoVelocity> ransac_ego_velocity(std::span<const RadarPoint> points, const RansacOptions& options = {});

}  // namespace rio

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "rio/manifold.hpp"

namespace rio {

/// Raised when an operation's precondition is violated by its inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Error-state layout: (dtheta, dp, dv, dbg, dba, dtheta_ext, dt_ext).
namespace idx {
inline constexpr int kTheta = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kBg = 9;
inline constexpr int kBa = 12;
inline constexpr int kExtRot = 15;
inline constexpr int kExtPos = 18;
}  // namespace idx

inline constexpr int kErrorDim = 21;
/// Error states that are updated when the extrinsics are frozen.
inline constexpr int kCoreDim = 15;
inline constexpr int kNoiseDim = 12;

using ErrorVector = Eigen::Matrix<double, kErrorDim, 1>;
using ErrorCovariance = Eigen::Matrix<double, kErrorDim, kErrorDim>;
using NoiseJacobian = Eigen::Matrix<double, kErrorDim, kNoiseDim>;
using NoiseCovariance = Eigen::Matrix<double, kNoiseDim, kNoiseDim>;

/// Rigid transform; `rotation` maps child-frame vectors into the parent frame.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& o) const { return {rotation * o.rotation, rotation * o.translation + translation}; }
  Pose inverse() const {
    const Rotation inv = rotation.inverse();
    return {inv, -(inv * translation)};
  }
};

struct NavState {
  Rotation attitude;  // body -> world
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Rotation ext_rotation;  // radar -> body
  Vec3 ext_translation = Vec3::Zero();
  double timestamp = 0.0;

  Pose body_pose() const { return {attitude, position}; }
  Pose radar_pose() const { return body_pose() * Pose{ext_rotation, ext_translation}; }
};

struct ImuSample {
  double timestamp = 0.0;
  Vec3 accel = Vec3::Zero();  // specific force, m/s^2
  Vec3 gyro = Vec3::Zero();   // rad/s
};

/// Accelerometer range guard, m/s^2.
inline constexpr double kMaxSpecificForce = 320.0;

/// Throws if the sample is non-finite or out of the sensor range.
void validate(const ImuSample& u);

/// Continuous-time noise densities and the world gravity vector.
struct ImuNoiseParams {
  double gyro_noise = 2e-4;        // rad/s/sqrt(Hz)
  double accel_noise = 2e-3;       // m/s^2/sqrt(Hz)
  double gyro_bias_walk = 2e-5;    // rad/s^2/sqrt(Hz)
  double accel_bias_walk = 2e-4;   // m/s^3/sqrt(Hz)
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
};

inline constexpr double kMaxPropagationStep = 0.1;

/// Strapdown propagation of the nominal state over `dt` with a held sample.
NavState propagate_nominal(const NavState& x, const ImuSample& u, double dt, const Vec3& gravity);

struct PropagationJacobians {
  ErrorCovariance state;  // F_x
  NoiseJacobian noise;    // F_w, noise ordered (n_g, n_a, n_wg, n_wa)
};

/// Discrete-time error-state transition. Noise enters as
/// true = measured - bias - n for both gyro and accelerometer.
PropagationJacobians propagation_jacobians(const NavState& x, const ImuSample& u, double dt);

/// Discrete noise covariance Q matching `propagation_jacobians`.
NoiseCovariance discrete_noise(const ImuNoiseParams& q, double dt);

ErrorCovariance propagate_covariance(const ErrorCovariance& p, const NavState& x, const ImuSample& u, double dt,
                                     const ImuNoiseParams& q);

/// x [+] dx: rotations updated by right multiplication with Exp of their blocks.
NavState boxplus(const NavState& x, const ErrorVector& dx);

/// a [-] b, the inverse of boxplus: boxplus(b, boxminus(a, b)) == a.
ErrorVector boxminus(const NavState& a, const NavState& b);

void symmetrize(ErrorCovariance& p);

/// Applies an estimated error to the nominal state and resets the error.
std::pair<NavState, ErrorCovariance> inject_and_reset(const NavState& x, const ErrorCovariance& p,
                                                       const ErrorVector& dx);

struct InitialStdDevs {
  double attitude = 0.02;     // rad
  double position = 0.05;     // m
  double velocity = 0.2;      // m/s
  double gyro_bias = 0.005;   // rad/s
  double accel_bias = 0.1;    // m/s^2
  double ext_rotation = 1e-6;
  double ext_translation = 1e-6;
};

/// Position and heading from an external source.
struct ExternalPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

struct InitOptions {
  InitialStdDevs stddev;
  std::size_t min_samples = 50;
  /// Relative tolerance on |mean specific force| vs |g|.
  double gravity_tolerance = 0.2;
  /// Seed the gyro bias with the static mean angular rate.
  bool estimate_gyro_bias = true;
  Pose extrinsics;
};

/// Gravity-aligned initial state from a static IMU window.
/// `body_velocity` is expressed in the body frame; it is rotated to world.
std::pair<NavState, ErrorCovariance> initialize(std::span<const ImuSample> static_imu,
                                                const std::optional<Vec3>& body_velocity,
                                                const std::optional<ExternalPose>& external,
                                                const ImuNoiseParams& q, const InitOptions& options);

/// ZYX Euler helpers (yaw about z, then pitch about y, then roll about x).
Rotation from_rpy(double roll, double pitch, double yaw);
Vec3 to_rpy(const Rotation& r);

}  // namespace rio

#include "rio/ins.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rio {

void validate(const ImuSample& u) {
  if (!std::isfinite(u.timestamp) || !u.accel.allFinite() || !u.gyro.allFinite()) {
    throw Error("IMU sample has non-finite fields");
  }
  if (u.accel.norm() >= kMaxSpecificForce) {
    throw Error("IMU specific force outside sensor range");
  }
}

NavState propagate_nominal(const NavState& x, const ImuSample& u, double dt, const Vec3& gravity) {
  if (!(dt > 0.0)) {
    throw Error("propagation requires strictly increasing timestamps (dt=" + std::to_string(dt) + ")");
  }
  if (dt > kMaxPropagationStep) {
    throw Error("propagation step too large (dt=" + std::to_string(dt) + ")");
  }
  const Vec3 omega = u.gyro - x.gyro_bias;
  const Vec3 acc_world = x.attitude * (u.accel - x.accel_bias);

  NavState out = x;
  out.attitude = x.attitude * exp_so3(omega * dt);
  out.position = x.position + x.velocity * dt + 0.5 * acc_world * dt * dt + 0.5 * gravity * dt * dt;
  out.velocity = x.velocity + acc_world * dt + gravity * dt;
  out.timestamp = x.timestamp + dt;
  return out;
}

PropagationJacobians propagation_jacobians(const NavState& x, const ImuSample& u, double dt) {
  const Vec3 omega = u.gyro - x.gyro_bias;
  const Vec3 acc = u.accel - x.accel_bias;
  const Mat3& r = x.attitude.matrix();
  const Mat3 jr = right_jacobian(omega * dt);
  const Mat3 r_acc_skew = r * skew(acc);

  PropagationJacobians j;
  ErrorCovariance& f = j.state;
  f.setIdentity();
  f.block<3, 3>(idx::kTheta, idx::kTheta) = exp_so3(-omega * dt).matrix();
  f.block<3, 3>(idx::kTheta, idx::kBg) = -jr * dt;

  f.block<3, 3>(idx::kPos, idx::kTheta) = -0.5 * r_acc_skew * dt * dt;
  f.block<3, 3>(idx::kPos, idx::kVel) = Mat3::Identity() * dt;
  f.block<3, 3>(idx::kPos, idx::kBa) = -0.5 * r * dt * dt;

  f.block<3, 3>(idx::kVel, idx::kTheta) = -r_acc_skew * dt;
  f.block<3, 3>(idx::kVel, idx::kBa) = -r * dt;

  NoiseJacobian& g = j.noise;
  g.setZero();
  g.block<3, 3>(idx::kTheta, 0) = -jr * dt;
  g.block<3, 3>(idx::kPos, 3) = -0.5 * r * dt * dt;
  g.block<3, 3>(idx::kVel, 3) = -r * dt;
  g.block<3, 3>(idx::kBg, 6) = Mat3::Identity() * dt;
  g.block<3, 3>(idx::kBa, 9) = Mat3::Identity() * dt;
  return j;
}

NoiseCovariance discrete_noise(const ImuNoiseParams& q, double dt) {
  NoiseCovariance n = NoiseCovariance::Zero();
  n.block<3, 3>(0, 0).diagonal().setConstant(q.gyro_noise * q.gyro_noise / dt);
  n.block<3, 3>(3, 3).diagonal().setConstant(q.accel_noise * q.accel_noise / dt);
  n.block<3, 3>(6, 6).diagonal().setConstant(q.gyro_bias_walk * q.gyro_bias_walk / dt);
  n.block<3, 3>(9, 9).diagonal().setConstant(q.accel_bias_walk * q.accel_bias_walk / dt);
  return n;
}

ErrorCovariance propagate_covariance(const ErrorCovariance& p, const NavState& x, const ImuSample& u, double dt,
                                     const ImuNoiseParams& q) {
  const PropagationJacobians j = propagation_jacobians(x, u, dt);
  ErrorCovariance out = j.state * p * j.state.transpose() + j.noise * discrete_noise(q, dt) * j.noise.transpose();
  symmetrize(out);
  return out;
}

NavState boxplus(const NavState& x, const ErrorVector& dx) {
  NavState out = x;
  out.attitude = x.attitude * exp_so3(dx.segment<3>(idx::kTheta));
  out.position += dx.segment<3>(idx::kPos);
  out.velocity += dx.segment<3>(idx::kVel);
  out.gyro_bias += dx.segment<3>(idx::kBg);
  out.accel_bias += dx.segment<3>(idx::kBa);
  out.ext_rotation = x.ext_rotation * exp_so3(dx.segment<3>(idx::kExtRot));
  out.ext_translation += dx.segment<3>(idx::kExtPos);
  return out;
}

ErrorVector boxminus(const NavState& a, const NavState& b) {
  ErrorVector d;
  d.segment<3>(idx::kTheta) = log_so3(b.attitude.inverse() * a.attitude);
  d.segment<3>(idx::kPos) = a.position - b.position;
  d.segment<3>(idx::kVel) = a.velocity - b.velocity;
  d.segment<3>(idx::kBg) = a.gyro_bias - b.gyro_bias;
  d.segment<3>(idx::kBa) = a.accel_bias - b.accel_bias;
  d.segment<3>(idx::kExtRot) = log_so3(b.ext_rotation.inverse() * a.ext_rotation);
  d.segment<3>(idx::kExtPos) = a.ext_translation - b.ext_translation;
  return d;
}

void symmetrize(ErrorCovariance& p) { p = 0.5 * (p + p.transpose()).eval(); }

std::pair<NavState, ErrorCovariance> inject_and_reset(const NavState& x, const ErrorCovariance& p,
                                                       const ErrorVector& dx) {
  if (!dx.allFinite()) {
    throw Error("non-finite error-state correction");
  }
  NavState out = boxplus(x, dx);
  out.attitude.renormalize();
  out.ext_rotation.renormalize();
  ErrorCovariance cov = p;
  symmetrize(cov);
  return {out, cov};
}

Rotation from_rpy(double roll, double pitch, double yaw) {
  const Eigen::Matrix3d m = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                             Eigen::AngleAxisd(roll, Vec3::UnitX()))
                                .toRotationMatrix();
  return Rotation::from_matrix(m);
}

Vec3 to_rpy(const Rotation& rot) {
  const Mat3& r = rot.matrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

std::pair<NavState, ErrorCovariance> initialize(std::span<const ImuSample> static_imu,
                                                const std::optional<Vec3>& body_velocity,
                                                const std::optional<ExternalPose>& external,
                                                const ImuNoiseParams& q, const InitOptions& options) {
  if (static_imu.size() < options.min_samples) {
    throw Error("initialization needs at least " + std::to_string(options.min_samples) + " static IMU samples");
  }
  Vec3 mean_acc = Vec3::Zero();
  Vec3 mean_gyro = Vec3::Zero();
  for (const ImuSample& u : static_imu) {
    validate(u);
    mean_acc += u.accel;
    mean_gyro += u.gyro;
  }
  mean_acc /= static_cast<double>(static_imu.size());
  mean_gyro /= static_cast<double>(static_imu.size());

  const double g = q.gravity.norm();
  if (std::abs(mean_acc.norm() - g) > options.gravity_tolerance * g) {
    throw Error("mean specific force " + std::to_string(mean_acc.norm()) +
                " m/s^2 is inconsistent with gravity; vehicle not static");
  }

  // Body-frame "up" is the mean specific-force direction.
  const Vec3 up = mean_acc.normalized();
  const double roll = std::atan2(up.y(), up.z());
  const double pitch = std::atan2(-up.x(), std::hypot(up.y(), up.z()));
  const double yaw = external ? external->yaw : 0.0;

  // For a gravity vector that is not along -z, rotate the level frame onto it.
  const Rotation level = from_rpy(roll, pitch, yaw);
  const Quat align = Quat::FromTwoVectors(Vec3::UnitZ(), -q.gravity.normalized());

  NavState x;
  x.attitude = Rotation::from_quaternion(align) * level;
  x.position = external ? external->position : Vec3::Zero();
  x.velocity = body_velocity ? Vec3(x.attitude * *body_velocity) : Vec3::Zero();
  x.gyro_bias = options.estimate_gyro_bias ? mean_gyro : Vec3::Zero();
  x.ext_rotation = options.extrinsics.rotation;
  x.ext_translation = options.extrinsics.translation;
  x.timestamp = static_imu.back().timestamp;

  const InitialStdDevs& s = options.stddev;
  ErrorVector var;
  var.segment<3>(idx::kTheta).setConstant(s.attitude * s.attitude);
  var.segment<3>(idx::kPos).setConstant(s.position * s.position);
  var.segment<3>(idx::kVel).setConstant(s.velocity * s.velocity);
  var.segment<3>(idx::kBg).setConstant(s.gyro_bias * s.gyro_bias);
  var.segment<3>(idx::kBa).setConstant(s.accel_bias * s.accel_bias);
  var.segment<3>(idx::kExtRot).setConstant(s.ext_rotation * s.ext_rotation);
  var.segment<3>(idx::kExtPos).setConstant(s.ext_translation * s.ext_translation);
  ErrorCovariance p = var.asDiagonal();
  return {x, p};
}

}  // namespace rio

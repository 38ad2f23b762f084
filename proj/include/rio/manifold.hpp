#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Quat = Eigen::Quaterniond;

/// Element of SO(3), stored as a 3x3 orthonormal matrix.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Wraps `m` as-is; callers are expected to pass an orthonormal matrix.
  static Rotation from_matrix(const Mat3& m) { return Rotation(m); }
  static Rotation from_quaternion(const Quat& q) { return Rotation(q.normalized().toRotationMatrix()); }
  static Rotation identity() { return Rotation(); }

  const Mat3& matrix() const { return m_; }
  Quat quaternion() const { return Quat(m_).normalized(); }

  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Projects the stored matrix back onto SO(3) (nearest rotation via SVD).
  void renormalize();

  bool operator==(const Rotation&) const = default;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Below this rotation-vector norm exp/log use their Taylor expansions.
inline constexpr double kSmallAngle = 1e-6;

Mat3 skew(const Vec3& v);

Rotation exp_so3(const Vec3& phi);

/// Inverse of exp_so3. For a half-turn the axis sign is chosen so that its
/// largest-magnitude component is positive.
Vec3 log_so3(const Rotation& r);

/// Right Jacobian of SO(3) and its inverse.
Mat3 right_jacobian(const Vec3& phi);
Mat3 right_jacobian_inverse(const Vec3& phi);

/// Unit vector on S^2 with its tangent-plane basis.
class Direction {
 public:
  /// Normalizes `v`; `v` must be non-zero.
  explicit Direction(const Vec3& v);

  const Vec3& vector() const { return omega_; }

  /// Orthonormal 3x2 basis of the tangent plane at this direction.
  const Mat32& tangent_basis() const { return basis_; }

  /// omega^ * N(omega): maps tangent perturbations to direction-vector noise.
  Mat32 noise_map() const { return skew(omega_) * basis_; }

 private:
  Vec3 omega_;
  Mat32 basis_;
};

/// Deterministic tangent basis for a unit vector, seeded from the coordinate
/// axis with the smallest |component| of `omega`. Equal inputs give
/// bit-identical outputs.
Mat32 tangent_basis(const Vec3& omega);

}  // namespace rio

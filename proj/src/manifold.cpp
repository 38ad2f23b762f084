#include "rio/manifold.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace rio {

void Rotation::renormalize() {
  Eigen::JacobiSVD<Mat3> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  m_ = r;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation exp_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < kSmallAngle) {
    return Rotation::from_matrix(Mat3::Identity() + k + 0.5 * k * k);
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Rotation::from_matrix(Mat3::Identity() + a * k + b * k * k);
}

Vec3 log_so3(const Rotation& rot) {
  const Mat3& r = rot.matrix();
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * vee.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    // theta / sin(theta) ~ 1 + theta^2 / 6
    return 0.5 * (1.0 + theta * theta / 6.0) * vee;
  }
  if (s > 1e-4 || c > 0.0) {
    return (0.5 * theta / s) * vee;
  }

  // Near a half-turn: recover the axis from the symmetric part,
  // (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
  const Mat3 b = 0.5 * (r + r.transpose()) - c * Mat3::Identity();
  int i = 0;
  b.diagonal().maxCoeff(&i);
  Vec3 axis = b.col(i) / std::sqrt(b(i, i) * (1.0 - c));
  axis.normalize();
  if (vee.norm() > 1e-15) {
    if (axis.dot(vee) < 0.0) axis = -axis;
  } else {
    int j = 0;
    axis.cwiseAbs().maxCoeff(&j);
    if (axis[j] < 0.0) axis = -axis;
  }
  return theta * axis;
}

Mat3 right_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < kSmallAngle) {
    return Mat3::Identity() - 0.5 * k + k * k / 6.0;
  }
  const double t2 = theta * theta;
  return Mat3::Identity() - (1.0 - std::cos(theta)) / t2 * k +
         (theta - std::sin(theta)) / (t2 * theta) * k * k;
}

Mat3 right_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + 0.5 * k + k * k / 12.0;
  }
  const double t2 = theta * theta;
  const double coeff = 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * k + coeff * k * k;
}

Mat32 tangent_basis(const Vec3& omega) {
  int axis = 0;
  omega.cwiseAbs().minCoeff(&axis);
  Vec3 seed = Vec3::Zero();
  seed[axis] = 1.0;
  Vec3 n1 = seed - seed.dot(omega) * omega;
  n1.normalize();
  Vec3 n2 = omega.cross(n1);
  n2.normalize();
  Mat32 basis;
  basis.col(0) = n1;
  basis.col(1) = n2;
  return basis;
}

Direction::Direction(const Vec3& v) : omega_(v.normalized()), basis_(rio::tangent_basis(omega_)) {}

}  // namespace rio

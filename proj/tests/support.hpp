#pragma once

#include <random>

#include "rio/ins.hpp"

namespace rio::test {

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Rotation::from_quaternion(Quat(n(rng), n(rng), n(rng), n(rng)));
}

inline NavState random_state(std::mt19937_64& rng) {
  NavState x;
  x.attitude = random_rotation(rng);
  x.position = random_vec(rng, 100.0);
  x.velocity = random_vec(rng, 15.0);
  x.gyro_bias = random_vec(rng, 0.01);
  x.accel_bias = random_vec(rng, 0.1);
  x.ext_rotation = random_rotation(rng);
  x.ext_translation = random_vec(rng, 0.3);
  return x;
}

/// Central differences of f(x [+] h e_i) over all error-state directions.
template <int Rows, typename F>
Eigen::Matrix<double, Rows, kErrorDim> numeric_state_jacobian(const NavState& x, F f, double h = 1e-6) {
  Eigen::Matrix<double, Rows, kErrorDim> j;
  for (int i = 0; i < kErrorDim; ++i) {
    ErrorVector d = ErrorVector::Zero();
    d(i) = h;
    j.col(i) = (f(boxplus(x, d)) - f(boxplus(x, -d))) / (2.0 * h);
  }
  return j;
}

/// Relative error of an analytic Jacobian against a numeric one, with an
/// absolute floor so all-zero blocks compare sensibly.
template <typename A, typename B>
double relative_error(const A& analytic, const B& numeric, double floor = 1.0) {
  return (analytic - numeric).cwiseAbs().maxCoeff() / std::max(numeric.cwiseAbs().maxCoeff(), floor);
}

}  // namespace rio::test

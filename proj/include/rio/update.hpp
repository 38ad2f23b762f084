#pragma once

#include <Eigen/Dense>

#include "rio/ins.hpp"

namespace rio {

/// Accumulates the information-form normal equations H^T R^-1 H and
/// H^T R^-1 z over a batch of measurement blocks.
class NormalEquations {
 public:
  NormalEquations() { clear(); }

  template <int M>
  void add(const Eigen::Matrix<double, M, kErrorDim>& h, const Eigen::Matrix<double, M, M>& r_inv,
           const Eigen::Matrix<double, M, 1>& z) {
    const Eigen::Matrix<double, kErrorDim, M> ht_rinv = h.transpose() * r_inv;
    info_.noalias() += ht_rinv * h;
    rhs_.noalias() += ht_rinv * z;
    ++blocks_;
  }

  void add_scalar(const Eigen::Matrix<double, 1, kErrorDim>& h, double variance, double z) {
    info_.noalias() += h.transpose() * h / variance;
    rhs_.noalias() += h.transpose() * (z / variance);
    ++blocks_;
  }

  void clear() {
    info_.setZero();
    rhs_.setZero();
    blocks_ = 0;
  }

  const ErrorCovariance& information() const { return info_; }
  const ErrorVector& rhs() const { return rhs_; }
  std::size_t blocks() const { return blocks_; }

 private:
  ErrorCovariance info_;
  ErrorVector rhs_;
  std::size_t blocks_ = 0;
};

/// Gain products of one information-form Kalman step,
/// K = (H^T R^-1 H + P^-1)^-1 H^T R^-1, restricted to the active error states.
struct KalmanStep {
  ErrorVector kz = ErrorVector::Zero();            // K z
  ErrorCovariance kh = ErrorCovariance::Zero();    // K H
  ErrorCovariance krk = ErrorCovariance::Zero();   // K R K^T
};

/// Active error dimension: extrinsic states are excluded unless estimated.
inline int active_dim(bool estimate_extrinsics) { return estimate_extrinsics ? kErrorDim : kCoreDim; }

KalmanStep kalman_step(const ErrorCovariance& p, const NormalEquations& eq, int active);

/// Posterior covariance (I - KH) P, or the Joseph form when requested.
ErrorCovariance posterior_covariance(const ErrorCovariance& p, const KalmanStep& step, bool joseph_form);

}  // namespace rio

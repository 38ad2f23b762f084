#include "rio/update.hpp"

namespace rio {

KalmanStep kalman_step(const ErrorCovariance& p, const NormalEquations& eq, int active) {
  const Eigen::MatrixXd p_act = p.topLeftCorner(active, active);
  const Eigen::MatrixXd info = eq.information().topLeftCorner(active, active);
  const Eigen::VectorXd rhs = eq.rhs().head(active);

  const Eigen::MatrixXd p_inv = p_act.ldlt().solve(Eigen::MatrixXd::Identity(active, active));
  const Eigen::LDLT<Eigen::MatrixXd> a(info + p_inv);
  const Eigen::MatrixXd kh = a.solve(info);

  KalmanStep step;
  step.kz.head(active) = a.solve(rhs);
  step.kh.topLeftCorner(active, active) = kh;
  step.krk.topLeftCorner(active, active) = kh * a.solve(Eigen::MatrixXd::Identity(active, active));
  return step;
}

ErrorCovariance posterior_covariance(const ErrorCovariance& p, const KalmanStep& step, bool joseph_form) {
  const ErrorCovariance i_kh = ErrorCovariance::Identity() - step.kh;
  ErrorCovariance out;
  if (joseph_form) {
    out = i_kh * p * i_kh.transpose() + step.krk;
  } else {
    out = i_kh * p;
  }
  symmetrize(out);
  return out;
}

}  // namespace rio

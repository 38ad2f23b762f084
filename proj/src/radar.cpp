#include "rio/radar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rio {

Vec3 RadarPoint::position() const { return range * direction(); }

Vec3 RadarPoint::direction() const {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

RadarPoint RadarPoint::from_cartesian(const Vec3& p, double doppler, double snr) {
  RadarPoint pt;
  pt.range = p.norm();
  pt.azimuth = std::atan2(p.y(), p.x());
  pt.elevation = std::asin(std::clamp(p.z() / pt.range, -1.0, 1.0));
  pt.doppler = doppler;
  pt.snr = snr;
  return pt;
}

Mat3 point_covariance(const RadarPoint& pt, const RadarNoiseParams& n) {
  const double r = pt.range;
  const double ca = std::cos(pt.azimuth), sa = std::sin(pt.azimuth);
  const double ce = std::cos(pt.elevation), se = std::sin(pt.elevation);
  Mat3 j;
  j.col(0) << ce * ca, ce * sa, se;
  j.col(1) << -r * ce * sa, r * ce * ca, 0.0;
  j.col(2) << -r * se * ca, -r * se * sa, r * ce;
  const Vec3 var(n.sigma_range * n.sigma_range, n.sigma_azimuth * n.sigma_azimuth,
                 n.sigma_elevation * n.sigma_elevation);
  Mat3 cov = j * var.asDiagonal() * j.transpose();
  return 0.5 * (cov + cov.transpose());
}

DopplerResidual doppler_residual(const RadarPoint& pt, const NavState& x, const Vec3& gyro,
                                 const RadarNoiseParams& n, bool estimate_extrinsics) {
  const Direction dir(pt.direction());
  const Eigen::RowVector3d d = dir.vector().transpose();
  const Mat3& r = x.attitude.matrix();
  const Mat3& r_ext = x.ext_rotation.matrix();
  const Vec3 omega = gyro - x.gyro_bias;

  const Vec3 body_vel = r.transpose() * x.velocity + omega.cross(x.ext_translation);
  const Vec3 k = r_ext.transpose() * body_vel;

  DopplerResidual out;
  out.residual = d * k - pt.doppler;

  const Eigen::RowVector3d d_ext = d * r_ext.transpose();
  out.h.segment<3>(idx::kTheta) = d_ext * skew(r.transpose() * x.velocity);
  out.h.segment<3>(idx::kVel) = d_ext * r.transpose();
  out.h.segment<3>(idx::kBg) = d_ext * skew(x.ext_translation);
  if (estimate_extrinsics) {
    out.h.segment<3>(idx::kExtRot) = d * skew(k);
    out.h.segment<3>(idx::kExtPos) = d_ext * skew(omega);
  }

  const Eigen::RowVector2d j_dir = k.transpose() * dir.noise_map();
  const Vec2 dir_var(n.sigma_azimuth * n.sigma_azimuth, n.sigma_elevation * n.sigma_elevation);
  out.variance = j_dir * dir_var.asDiagonal() * j_dir.transpose() + n.sigma_doppler * n.sigma_doppler;
  return out;
}

DopplerGateResult gate_doppler(const RadarScan& scan, const NavState& x, const ErrorCovariance& p,
                               const Vec3& gyro, const RadarNoiseParams& n, const DopplerGateOptions& options) {
  DopplerGateResult out;
  const double m2 = options.sigma_multiplier * options.sigma_multiplier;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    DopplerResidual res = doppler_residual(scan.points[i], x, gyro, n, options.estimate_extrinsics);
    double var = res.variance;
    if (options.include_state_covariance) {
      var += res.h * p * res.h.transpose();
    }
    if (res.residual * res.residual <= m2 * var) {
      out.inliers.push_back(i);
      out.inlier_residuals.push_back(res);
    } else {
      out.outliers.push_back(i);
    }
  }
  out.skip_update = out.inliers.empty();
  return out;
}

std::pair<NavState, ErrorCovariance> doppler_update(const NavState& x, const ErrorCovariance& p,
                                                    std::span<const DopplerResidual> residuals,
                                                    bool estimate_extrinsics, bool joseph_form) {
  if (residuals.empty()) {
    return {x, p};
  }
  NormalEquations eq;
  for (const DopplerResidual& r : residuals) {
    eq.add_scalar(r.h, r.variance, r.residual);
  }
  const KalmanStep step = kalman_step(p, eq, active_dim(estimate_extrinsics));
  return inject_and_reset(x, posterior_covariance(p, step, joseph_form), -step.kz);
}

namespace {

bool spans_space(const Eigen::MatrixX3d& dirs) {
  if (dirs.rows() < 3) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(dirs.transpose() * dirs);
  const Vec3 ev = es.eigenvalues();
  return ev(0) > 1e-9 * std::max(ev(2), 1e-300);
}

Vec3 least_squares(const Eigen::MatrixX3d& dirs, const Eigen::VectorXd& doppler) {
  return dirs.colPivHouseholderQr().solve(doppler);
}

}  // namespace

std::optional<EgoVelocity> ransac_ego_velocity(std::span<const RadarPoint> points, const RansacOptions& options) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 3) return std::nullopt;

  Eigen::MatrixX3d dirs(n, 3);
  Eigen::VectorXd doppler(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dirs.row(i) = points[i].direction().transpose();
    doppler(i) = points[i].doppler;
  }
  if (!spans_space(dirs)) return std::nullopt;

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

  auto count_inliers = [&](const Vec3& v, std::vector<bool>* mask) {
    const Eigen::VectorXd err = (dirs * v - doppler).cwiseAbs();
    std::size_t count = 0;
    if (mask) mask->assign(points.size(), false);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (err(i) <= options.inlier_threshold) {
        ++count;
        if (mask) (*mask)[i] = true;
      }
    }
    return count;
  };

  std::size_t best_count = 0;
  Vec3 best_v = Vec3::Zero();
  long needed = options.max_iterations;
  for (long it = 0; it < std::max<long>(options.min_iterations, needed) && it < options.max_iterations; ++it) {
    Eigen::Index a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || a == c || b == c) continue;
    Mat3 m;
    m.row(0) = dirs.row(a);
    m.row(1) = dirs.row(b);
    m.row(2) = dirs.row(c);
    if (std::abs(m.determinant()) < 1e-6) continue;
    const Vec3 v = m.partialPivLu().solve(Vec3(doppler(a), doppler(b), doppler(c)));
    const std::size_t count = count_inliers(v, nullptr);
    if (count > best_count) {
      best_count = count;
      best_v = v;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double miss = 1.0 - w * w * w;
      if (miss <= 0.0) {
        needed = 0;
      } else {
        needed = static_cast<long>(std::ceil(std::log(1.0 - options.confidence) / std::log(miss)));
      }
    }
  }
  if (best_count < 3) return std::nullopt;

  std::vector<bool> mask;
  count_inliers(best_v, &mask);
  Eigen::MatrixX3d in_dirs(static_cast<Eigen::Index>(best_count), 3);
  Eigen::VectorXd in_doppler(static_cast<Eigen::Index>(best_count));
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i] && row < in_dirs.rows()) {
      in_dirs.row(row) = dirs.row(i);
      in_doppler(row) = doppler(i);
      ++row;
    }
  }
  if (!spans_space(in_dirs)) return std::nullopt;

  EgoVelocity out;
  out.velocity = least_squares(in_dirs, in_doppler);
  count_inliers(out.velocity, &out.inliers);
  return out;
}

}  // namespace rio

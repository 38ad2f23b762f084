#include "rio/scan_matcher.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace rio {

std::vector<RadarPoint> snr_filter(std::span<const RadarPoint> points, double keep_fraction, std::size_t min_points) {
  std::vector<RadarPoint> out(points.begin(), points.end());
  if (points.size() < min_points) return out;

  std::vector<double> snr;
  snr.reserve(points.size());
  for (const RadarPoint& p : points) snr.push_back(p.snr);
  std::sort(snr.begin(), snr.end());

  const double rank = (1.0 - keep_fraction) * static_cast<double>(snr.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, snr.size() - 1);
  const double threshold = snr[lo] + (rank - static_cast<double>(lo)) * (snr[hi] - snr[lo]);

  std::erase_if(out, [threshold](const RadarPoint& p) { return p.snr < threshold; });
  return out;
}

std::optional<NeighborhoodGaussian> fit_neighborhood(const KdTree& map, const Vec3& query,
                                                     const NeighborhoodOptions& options) {
  const std::vector<KdTree::Neighbor> nn = map.knn(query, options.neighbors);
  if (nn.empty()) return std::nullopt;
  if (nn.front().squared_distance > options.association_radius * options.association_radius) return std::nullopt;

  const double n = static_cast<double>(nn.size());
  Vec3 sum = Vec3::Zero();
  for (const KdTree::Neighbor& nb : nn) sum += nb.point;
  const Vec3 centroid = sum / n;

  Mat3 scatter = Mat3::Zero();
  for (const KdTree::Neighbor& nb : nn) {
    const Vec3 d = nb.point - centroid;
    scatter += d * d.transpose();
  }
  const Mat3 cov = scatter / n;

  NeighborhoodGaussian g;
  g.centroid = centroid;
  g.covariance = options.inflation * cov + options.regularization * Mat3::Identity();
  g.count = nn.size();
  return g;
}

P2dResidual p2d_residual(const Vec3& point, const Mat3& point_cov, const NavState& x, const NeighborhoodGaussian& g,
                         bool estimate_extrinsics) {
  const Mat3& r = x.attitude.matrix();
  const Mat3& r_ext = x.ext_rotation.matrix();
  const Vec3 body = r_ext * point + x.ext_translation;

  P2dResidual out;
  out.residual = r * body + x.position - g.centroid;
  out.h.block<3, 3>(0, idx::kTheta) = -r * skew(body);
  out.h.block<3, 3>(0, idx::kPos).setIdentity();
  if (estimate_extrinsics) {
    out.h.block<3, 3>(0, idx::kExtRot) = -r * r_ext * skew(point);
    out.h.block<3, 3>(0, idx::kExtPos) = r;
  }
  const Mat3 j = r * r_ext;
  out.covariance = j * point_cov * j.transpose() + g.covariance;
  return out;
}

P2dResidual p2d_residual(const RadarPoint& pt, const NavState& x, const NeighborhoodGaussian& g,
                         const RadarNoiseParams& n, bool estimate_extrinsics) {
  return p2d_residual(pt.position(), point_covariance(pt, n), x, g, estimate_extrinsics);
}

double mahalanobis_squared(const P2dResidual& r, const ErrorCovariance& p) {
  const Mat3 s = r.h * p * r.h.transpose() + r.covariance;
  return r.residual.dot(s.ldlt().solve(r.residual));
}

bool chi2_gate(const P2dResidual& r, const ErrorCovariance& p, double threshold) {
  return mahalanobis_squared(r, p) <= threshold;
}

IteratedUpdateResult iterated_update(const NavState& prior, const ErrorCovariance& p, const Associator& associate,
                                     const IteratedUpdateOptions& options) {
  IteratedUpdateResult result;
  result.state = prior;
  result.covariance = p;

  const int active = active_dim(options.estimate_extrinsics);
  NavState iterate = prior;
  ErrorCovariance p_iter = p;
  KalmanStep step;

  for (int it = 1; it <= options.max_iterations; ++it) {
    const std::vector<P2dResidual> blocks = associate(iterate);
    if (blocks.size() < options.min_matches) break;

    NormalEquations eq;
    for (const P2dResidual& b : blocks) {
      eq.add<3>(b.h, b.covariance.inverse(), b.residual);
    }

    ErrorVector offset = boxminus(iterate, prior);
    offset.tail(kErrorDim - active).setZero();
    // J^-1 maps the prior tangent space onto the iterate's; identity unless
    // the exact right Jacobian is requested.
    ErrorCovariance j_inv = ErrorCovariance::Identity();
    if (options.exact_prior_jacobian) {
      j_inv.block<3, 3>(idx::kTheta, idx::kTheta) = right_jacobian(offset.segment<3>(idx::kTheta));
      if (options.estimate_extrinsics) {
        j_inv.block<3, 3>(idx::kExtRot, idx::kExtRot) = right_jacobian(offset.segment<3>(idx::kExtRot));
      }
      p_iter = j_inv * p * j_inv.transpose();
      symmetrize(p_iter);
    }
    step = kalman_step(p_iter, eq, active);
    const ErrorVector dx = -step.kz - (ErrorCovariance::Identity() - step.kh) * (j_inv * offset);

    iterate = boxplus(iterate, dx);
    iterate.attitude.renormalize();
    iterate.ext_rotation.renormalize();

    result.applied = true;
    result.iterations = it;
    result.matches = blocks.size();
    if (dx.norm() < options.convergence) {
      result.converged = true;
      break;
    }
  }

  if (result.applied) {
    result.state = iterate;
    result.covariance = posterior_covariance(p_iter, step, options.joseph_form);
  }
  return result;
}

double centroid_offset(const NeighborhoodGaussian& g, const Vec3& query, const NeighborhoodOptions& options) {
  const Mat3 raw = (g.covariance - options.regularization * Mat3::Identity()) / options.inflation;
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(raw);
  const Vec3 d = query - g.centroid;
  double worst = 0.0;
  for (int axis = 1; axis < 3; ++axis) {  // eigenvalues ascending: skip the normal
    const double var = std::max(eig.eigenvalues()(axis), options.regularization);
    worst = std::max(worst, std::abs(eig.eigenvectors().col(axis).dot(d)) / std::sqrt(var));
  }
  return worst;
}

double normal_offset(const NeighborhoodGaussian& g, const Vec3& query, const NeighborhoodOptions& options) {
  const Mat3 raw = (g.covariance - options.regularization * Mat3::Identity()) / options.inflation;
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(raw);
  const double var = std::max(eig.eigenvalues()(0), options.regularization);
  return std::abs(eig.eigenvectors().col(0).dot(query - g.centroid)) / std::sqrt(var);
}

bool shape_planar(NeighborhoodGaussian& g, double planar_ratio, double planar_inflation) {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(g.covariance);
  const Vec3& ev = eig.eigenvalues();
  if (!(ev(0) < planar_ratio * ev(1))) return false;
  if (planar_inflation == 1.0) return true;
  const Vec3 scaled(ev(0), planar_inflation * ev(1), planar_inflation * ev(2));
  g.covariance = eig.eigenvectors() * scaled.asDiagonal() * eig.eigenvectors().transpose();
  return true;
}

std::vector<ScanPoint> prepare_scan(std::span<const RadarPoint> points, const RadarNoiseParams& n) {
  std::vector<ScanPoint> out;
  out.reserve(points.size());
  for (const RadarPoint& pt : points) out.push_back({pt.position(), point_covariance(pt, n)});
  return out;
}

std::vector<P2dResidual> associate_points(std::span<const ScanPoint> scan, const NavState& x,
                                          const ErrorCovariance& p, const KdTree& map, const MatchOptions& options) {
  std::vector<P2dResidual> blocks;
  blocks.reserve(scan.size());
  const Pose radar = x.radar_pose();
  for (const ScanPoint& sp : scan) {
    const Vec3 query = radar * sp.position;
    auto g = fit_neighborhood(map, query, options.neighborhood);
    if (!g) continue;
    if (g->count >= 3) {  // shape checks need a surface, not a single point
      if (options.max_centroid_offset > 0.0 &&
          centroid_offset(*g, query, options.neighborhood) > options.max_centroid_offset) {
        continue;
      }
      if (options.max_normal_offset > 0.0 &&
          normal_offset(*g, query, options.neighborhood) > options.max_normal_offset) {
        continue;
      }
      if (!shape_planar(*g, options.planar_ratio, options.planar_inflation) && options.planar_only) continue;
    }
    P2dResidual r = p2d_residual(sp.position, sp.covariance, x, *g, options.update.estimate_extrinsics);
    if (chi2_gate(r, p, options.chi2_threshold)) blocks.push_back(std::move(r));
  }
  return blocks;
}

IteratedUpdateResult match_scan(const NavState& x, const ErrorCovariance& p, std::span<const ScanPoint> scan,
                                const KdTree& map, const MatchOptions& options) {
  if (map.empty()) {
    IteratedUpdateResult skipped;
    skipped.state = x;
    skipped.covariance = p;
    return skipped;
  }
  auto associate = [&](const NavState& iterate) { return associate_points(scan, iterate, p, map, options); };
  return iterated_update(x, p, associate, options.update);
}

void augment_map(LocalMap& map, std::span<const ScanPoint> scan, const NavState& x) {
  map.update_center(x.position);
  const Pose radar = x.radar_pose();
  std::vector<Vec3> world;
  world.reserve(scan.size());
  for (const ScanPoint& sp : scan) world.push_back(radar * sp.position);
  map.insert(world);
}

}  // namespace rio

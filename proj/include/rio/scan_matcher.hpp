#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rio/local_map.hpp"
#include "rio/radar.hpp"

namespace rio {

/// Keeps the detections whose SNR is at or above the (1 - keep_fraction)
/// percentile of this scan (linear interpolation between order statistics).
/// Scans with fewer than `min_points` detections pass through unchanged.
std::vector<RadarPoint> snr_filter(std::span<const RadarPoint> points, double keep_fraction = 0.95,
                                   std::size_t min_points = 5);

struct NeighborhoodOptions {
  std::size_t neighbors = 10;
  double association_radius = 5.0;  // m, to the nearest neighbor
  double inflation = 100.0;
  double regularization = 1e-4;  // m^2
};

struct NeighborhoodGaussian {
  Vec3 centroid;
  Mat3 covariance;
  std::size_t count = 0;
};

/// Gaussian fitted to the k nearest map points around `query`:
/// covariance = inflation * (1/N) sum (p - c)(p - c)^T + regularization * I.
std::optional<NeighborhoodGaussian> fit_neighborhood(const KdTree& map, const Vec3& query,
                                                     const NeighborhoodOptions& options);

using BlockJacobian = Eigen::Matrix<double, 3, kErrorDim>;

/// One point-to-distribution measurement block.
struct P2dResidual {
  Vec3 residual;  // transformed point - centroid, m
  BlockJacobian h = BlockJacobian::Zero();
  Mat3 covariance;  // R_block
};

/// Residual for a radar-frame point with radar-frame covariance.
P2dResidual p2d_residual(const Vec3& point, const Mat3& point_cov, const NavState& x, const NeighborhoodGaussian& g,
                         bool estimate_extrinsics = false);
P2dResidual p2d_residual(const RadarPoint& pt, const NavState& x, const NeighborhoodGaussian& g,
                         const RadarNoiseParams& n, bool estimate_extrinsics = false);

/// chi^2 quantile for 3 degrees of freedom at p = 0.95.
inline constexpr double kChi2Dof3P95 = 7.814727903251178;

double mahalanobis_squared(const P2dResidual& r, const ErrorCovariance& p);
bool chi2_gate(const P2dResidual& r, const ErrorCovariance& p, double threshold = kChi2Dof3P95);

struct IteratedUpdateOptions {
  int max_iterations = 5;
  double convergence = 1e-4;
  std::size_t min_matches = 10;
  /// Use the exact right Jacobian for the prior pull-back instead of identity.
  bool exact_prior_jacobian = false;
  bool joseph_form = false;
  bool estimate_extrinsics = false;
};

struct IteratedUpdateResult {
  NavState state;
  ErrorCovariance covariance;
  bool applied = false;
  bool converged = false;
  int iterations = 0;
  std::size_t matches = 0;
};

/// Re-associates at the given iterate and returns the kept measurement blocks.
using Associator = std::function<std::vector<P2dResidual>(const NavState&)>;

/// Iterated ESKF: re-linearizes and re-associates at each iterate, applying
///   dx = -K z - (I - K H) J^-1 (x_k [-] x_prior)
/// until |dx| < convergence or max_iterations, then P <- (I - K H) P with the
/// last iterate's H. Leaves the state untouched when the first association
/// yields fewer than min_matches blocks.
IteratedUpdateResult iterated_update(const NavState& prior, const ErrorCovariance& p, const Associator& associate,
                                     const IteratedUpdateOptions& options);

/// A scan point prepared for matching: radar-frame position and covariance.
struct ScanPoint {
  Vec3 position;
  Mat3 covariance;
};

/// Largest offset of `query` from the neighborhood centroid along the two
/// dominant principal axes, in units of the (un-inflated) standard deviation.
double centroid_offset(const NeighborhoodGaussian& g, const Vec3& query, const NeighborhoodOptions& options);

/// Distance of `query` from the centroid along the smallest-variance axis, in
/// standard deviations of the un-inflated neighborhood (floored at the
/// regularization).
double normal_offset(const NeighborhoodGaussian& g, const Vec3& query, const NeighborhoodOptions& options);

/// Applies the planar in-plane inflation to `g`; returns true if it was planar.
bool shape_planar(NeighborhoodGaussian& g, double planar_ratio, double planar_inflation);

std::vector<ScanPoint> prepare_scan(std::span<const RadarPoint> points, const RadarNoiseParams& n);

struct MatchOptions {
  NeighborhoodOptions neighborhood;
  double chi2_threshold = kChi2Dof3P95;
  /// Rejects a neighborhood whose centroid sits more than this many standard
  /// deviations from the query along either of its two dominant axes, i.e.
  /// queries at the rim of the mapped area. 0 disables the check.
  double max_centroid_offset = 1.0;
  /// A neighborhood counts as planar when its smallest covariance eigenvalue
  /// is below planar_ratio times the middle one. Its two in-plane variances
  /// are then multiplied by planar_inflation. 1 disables.
  double planar_ratio = 0.1;
  double planar_inflation = 1.0;
  bool planar_only = false;  // drop non-planar neighborhoods
  /// Rejects queries farther than this many standard deviations from the
  /// neighborhood along its normal. 0 disables.
  double max_normal_offset = 0.0;
  IteratedUpdateOptions update;
};

/// Associates every scan point against `map` at state `x`, applying the chi^2
/// gate with the prior covariance `p`. Output order follows the input order.
std::vector<P2dResidual> associate_points(std::span<const ScanPoint> scan, const NavState& x,
                                          const ErrorCovariance& p, const KdTree& map, const MatchOptions& options);

/// Scan-to-map iterated update.
IteratedUpdateResult match_scan(const NavState& x, const ErrorCovariance& p, std::span<const ScanPoint> scan,
                                const KdTree& map, const MatchOptions& options);

/// Transforms scan points with the posterior state and inserts them into the
/// local map after re-centering it on the vehicle.
void augment_map(LocalMap& map, std::span<const ScanPoint> scan, const NavState& x);

}  // namespace rio

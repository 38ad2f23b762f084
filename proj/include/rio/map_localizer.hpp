#pragma once

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "rio/kd_tree.hpp"
#include "rio/scan_matcher.hpp"

namespace rio {

struct KeyframePoint {
  Vec3 position;  // anchor radar frame, m
  Mat3 covariance;
  std::size_t frame = 0;  // source frame id
};

struct Keyframe {
  double timestamp = 0.0;  // anchor frame time
  std::vector<KeyframePoint> points;
  std::size_t span = 0;  // number of source frames
};

/// Static points of one radar frame together with the odometry radar pose.
struct KeyframeSource {
  std::size_t frame = 0;
  double timestamp = 0.0;
  Pose radar_pose;  // radar -> world
  std::vector<ScanPoint> points;
};

/// Projects every frame into the newest frame's radar coordinates; each
/// covariance is rotated with its point (R_rel S R_rel^T).
Keyframe accumulate_keyframe(std::span<const KeyframeSource> frames);

/// Drops points that have no other point within `dist_threshold`. Points are
/// binned into a voxel grid and only the own and the 26 adjacent voxels are
/// searched, which is exhaustive while dist_threshold <= voxel_size.
///
/// With `trust_occupied_voxels` set, every point sharing its voxel with another
/// point is kept without a distance check (faster, no longer exact).
std::vector<std::size_t> voxel_outlier_inliers(std::span<const Vec3> points, double voxel_size,
                                               double dist_threshold, bool trust_occupied_voxels = false);

std::vector<Vec3> voxel_outlier_removal(std::span<const Vec3> points, double voxel_size, double dist_threshold,
                                        bool trust_occupied_voxels = false);

/// Fixed world-frame point set used as the localization target.
class PriorMap {
 public:
  PriorMap() = default;
  explicit PriorMap(std::span<const Vec3> points);

  const KdTree& tree() const { return tree_; }
  std::size_t size() const { return tree_.size(); }

 private:
  KdTree tree_;
};

struct KeyframeOptions {
  std::size_t frames = 10;
  double voxel_size = 1.0;
  double dist_threshold = 1.0;
  bool trust_occupied_voxels = false;
  MatchOptions match;
};

/// Keyframe-to-prior-map iterated update (same measurement model as
/// scan-to-map matching, with transported keyframe covariances).
IteratedUpdateResult prior_map_update(const NavState& x, const ErrorCovariance& p, const Keyframe& kf,
                                      const PriorMap& map, const MatchOptions& options);

/// Collects frames and emits a keyframe every `frames` frames; the buffer is
/// cleared on emission so keyframes never share source frames.
class KeyframeAccumulator {
 public:
  explicit KeyframeAccumulator(const KeyframeOptions& options) : options_(options) {}

  /// Adds a frame; returns the finished, outlier-filtered keyframe when the
  /// configured frame count is reached.
  std::optional<Keyframe> add(KeyframeSource frame);

  std::size_t pending() const { return buffer_.size(); }
  void reset() { buffer_.clear(); }

 private:
  KeyframeOptions options_;
  std::vector<KeyframeSource> buffer_;
};

}  // namespace rio

#include "rio/map_localizer.hpp"

#include <cmath>
#include <unordered_map>

namespace rio {

Keyframe accumulate_keyframe(std::span<const KeyframeSource> frames) {
  Keyframe kf;
  if (frames.empty()) return kf;
  const KeyframeSource& anchor = frames.back();
  const Pose world_to_anchor = anchor.radar_pose.inverse();
  kf.timestamp = anchor.timestamp;
  kf.span = frames.size();
  for (const KeyframeSource& f : frames) {
    const Pose rel = world_to_anchor * f.radar_pose;
    const Mat3& r = rel.rotation.matrix();
    for (const ScanPoint& sp : f.points) {
      kf.points.push_back({rel * sp.position, r * sp.covariance * r.transpose(), f.frame});
    }
  }
  return kf;
}

namespace {

struct VoxelHash {
  std::size_t operator()(const Eigen::Vector3i& v) const {
    return static_cast<std::size_t>(v.x()) * 73856093u ^ static_cast<std::size_t>(v.y()) * 19349663u ^
           static_cast<std::size_t>(v.z()) * 83492791u;
  }
};

}  // namespace

std::vector<std::size_t> voxel_outlier_inliers(std::span<const Vec3> points, double voxel_size,
                                               double dist_threshold, bool trust_occupied_voxels) {
  std::unordered_map<Eigen::Vector3i, std::vector<std::size_t>, VoxelHash> grid;
  std::vector<Eigen::Vector3i> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    keys[i] = (points[i] / voxel_size).array().floor().cast<int>();
    grid[keys[i]].push_back(i);
  }

  const double t2 = dist_threshold * dist_threshold;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (trust_occupied_voxels && grid[keys[i]].size() >= 2) {
      kept.push_back(i);
      continue;
    }
    bool has_neighbor = false;
    for (int dx = -1; dx <= 1 && !has_neighbor; ++dx) {
      for (int dy = -1; dy <= 1 && !has_neighbor; ++dy) {
        for (int dz = -1; dz <= 1 && !has_neighbor; ++dz) {
          auto it = grid.find(keys[i] + Eigen::Vector3i(dx, dy, dz));
          if (it == grid.end()) continue;
          for (const std::size_t j : it->second) {
            if (j != i && (points[j] - points[i]).squaredNorm() <= t2) {
              has_neighbor = true;
              break;
            }
          }
        }
      }
    }
    if (has_neighbor) kept.push_back(i);
  }
  return kept;
}

std::vector<Vec3> voxel_outlier_removal(std::span<const Vec3> points, double voxel_size, double dist_threshold,
                                        bool trust_occupied_voxels) {
  std::vector<Vec3> out;
  for (const std::size_t i : voxel_outlier_inliers(points, voxel_size, dist_threshold, trust_occupied_voxels)) {
    out.push_back(points[i]);
  }
  return out;
}

PriorMap::PriorMap(std::span<const Vec3> points) { tree_.insert(points); }

IteratedUpdateResult prior_map_update(const NavState& x, const ErrorCovariance& p, const Keyframe& kf,
                                      const PriorMap& map, const MatchOptions& options) {
  std::vector<ScanPoint> scan;
  scan.reserve(kf.points.size());
  for (const KeyframePoint& kp : kf.points) scan.push_back({kp.position, kp.covariance});
  return match_scan(x, p, scan, map.tree(), options);
}

std::optional<Keyframe> KeyframeAccumulator::add(KeyframeSource frame) {
  buffer_.push_back(std::move(frame));
  if (buffer_.size() < options_.frames) return std::nullopt;

  Keyframe kf = accumulate_keyframe(buffer_);
  buffer_.clear();

  std::vector<Vec3> positions;
  positions.reserve(kf.points.size());
  for (const KeyframePoint& kp : kf.points) positions.push_back(kp.position);
  std::vector<KeyframePoint> kept;
  for (const std::size_t i :
       voxel_outlier_inliers(positions, options_.voxel_size, options_.dist_threshold, options_.trust_occupied_voxels)) {
    kept.push_back(kf.points[i]);
  }
  kf.points = std::move(kept);
  return kf;
}

}  // namespace rio

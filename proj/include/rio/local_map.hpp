#pragma once

#include <optional>
#include <span>
#include <unordered_map>

#include "rio/kd_tree.hpp"

namespace rio {

struct LocalMapOptions {
  double radius = 200.0;     // m, kept around the map center
  double hysteresis = 20.0;  // m, vehicle travel before the map is re-centered
  bool dedup = true;
  double dedup_voxel = 0.5;  // m
};

/// Sliding window of registered world-frame points around the vehicle.
class LocalMap {
 public:
  LocalMap() = default;
  explicit LocalMap(const LocalMapOptions& options) : options_(options) {}

  /// Re-centers on `position` and trims once it drifts beyond the hysteresis
  /// margin. Returns the number of trimmed points.
  std::size_t update_center(const Vec3& position);

  /// Inserts points inside the window; returns how many were stored.
  std::size_t insert(std::span<const Vec3> world_points);

  const KdTree& tree() const { return tree_; }
  std::size_t size() const { return tree_.size(); }
  bool empty() const { return tree_.empty(); }
  const std::optional<Vec3>& center() const { return center_; }
  const LocalMapOptions& options() const { return options_; }

 private:
  struct VoxelHash {
    std::size_t operator()(const Eigen::Vector3i& v) const {
      return static_cast<std::size_t>(v.x()) * 73856093u ^ static_cast<std::size_t>(v.y()) * 19349663u ^
             static_cast<std::size_t>(v.z()) * 83492791u;
    }
  };
  Eigen::Vector3i voxel_of(const Vec3& p) const;

  LocalMapOptions options_;
  KdTree tree_;
  std::optional<Vec3> center_;
  std::unordered_map<Eigen::Vector3i, int, VoxelHash> occupancy_;
};

}  // namespace rio

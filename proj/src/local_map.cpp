#include "rio/local_map.hpp"

#include <cmath>

namespace rio {

Eigen::Vector3i LocalMap::voxel_of(const Vec3& p) const {
  return (p / options_.dedup_voxel).array().floor().cast<int>();
}

std::size_t LocalMap::update_center(const Vec3& position) {
  if (!center_) {
    center_ = position;
    return 0;
  }
  if ((position - *center_).norm() <= options_.hysteresis) return 0;

  center_ = position;
  std::vector<Vec3> removed;
  const std::size_t count = tree_.remove_outside(*center_, options_.radius, options_.dedup ? &removed : nullptr);
  for (const Vec3& p : removed) {
    auto it = occupancy_.find(voxel_of(p));
    if (it != occupancy_.end() && --it->second <= 0) occupancy_.erase(it);
  }
  return count;
}

std::size_t LocalMap::insert(std::span<const Vec3> world_points) {
  std::size_t stored = 0;
  const double r2 = options_.radius * options_.radius;
  for (const Vec3& p : world_points) {
    if (center_ && (p - *center_).squaredNorm() > r2) continue;
    if (options_.dedup) {
      int& count = occupancy_[voxel_of(p)];
      if (count > 0) continue;
      ++count;
    }
    tree_.insert(p);
    ++stored;
  }
  return stored;
}

}  // namespace rio

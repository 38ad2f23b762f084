#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "rio/manifold.hpp"

namespace rio {

/// Incremental 3-D kd-tree with lazy deletion and partial rebuilds.
///
/// Subtrees are rebuilt from their median when one child holds more than
/// `balance_alpha` of the subtree, or when more than `delete_alpha` of the
/// subtree is marked deleted. Every node keeps the bounding box of its
/// subtree, which is what the searches prune on, so query results never
/// depend on the current tree shape.
class KdTree {
 public:
  struct Options {
    double balance_alpha = 0.7;
    double delete_alpha = 0.5;
    int min_rebuild_size = 16;
  };

  struct Neighbor {
    Vec3 point;
    std::uint64_t id = 0;
    double squared_distance = 0.0;
  };

  KdTree() = default;
  explicit KdTree(const Options& options) : options_(options) {}

  /// Inserts a point and returns its id. Ids increase with insertion order.
  std::uint64_t insert(const Vec3& p);
  void insert(std::span<const Vec3> points);

  /// The k nearest alive points ordered by (squared distance, id).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  /// Deletes every point farther than `radius` from `center`.
  /// Removed points are appended to `removed` when it is non-null.
  std::size_t remove_outside(const Vec3& center, double radius, std::vector<Vec3>* removed = nullptr);

  /// Deletes every point inside `box` (boundary inclusive).
  std::size_t remove_box(const Eigen::AlignedBox3d& box, std::vector<Vec3>* removed = nullptr);

  std::size_t size() const { return root_ < 0 ? 0 : static_cast<std::size_t>(nodes_[root_].alive); }
  bool empty() const { return size() == 0; }

  /// Alive points in ascending id order.
  std::vector<Vec3> points() const;

  void clear();

  /// Height of the tree, for balance checks.
  int height() const { return height(root_); }

 private:
  struct Node {
    Vec3 point;
    Eigen::AlignedBox3d box;
    std::uint64_t id = 0;
    int left = -1;
    int right = -1;
    int size = 1;
    int alive = 1;
    std::uint8_t axis = 0;
    bool deleted = false;
  };

  struct Item {
    Vec3 point;
    std::uint64_t id;
  };

  int new_node(const Vec3& p, std::uint64_t id, std::uint8_t axis);
  int build(std::vector<Item>& items, std::size_t lo, std::size_t hi);
  void collect(int n, std::vector<Item>& items, bool free_nodes);
  int rebuild(int n);
  void refresh(int n);
  void rebalance_deleted(int& n);

  template <typename Outside, typename Contains>
  std::size_t remove_if(int n, const Outside& skip_subtree, const Contains& contains, std::vector<Vec3>* removed);

  int height(int n) const;

  Options options_;
  std::vector<Node> nodes_;
  std::vector<int> free_;
  int root_ = -1;
  std::uint64_t next_id_ = 0;
};

}  // namespace rio

#include "rio/kd_tree.hpp"

#include <algorithm>

namespace rio {

namespace {

bool closer(double d1, std::uint64_t id1, double d2, std::uint64_t id2) {
  return d1 < d2 || (d1 == d2 && id1 < id2);
}

}  // namespace

int KdTree::new_node(const Vec3& p, std::uint64_t id, std::uint8_t axis) {
  Node node;
  node.point = p;
  node.box = Eigen::AlignedBox3d(p, p);
  node.id = id;
  node.axis = axis;
  if (!free_.empty()) {
    const int n = free_.back();
    free_.pop_back();
    nodes_[n] = node;
    return n;
  }
  nodes_.push_back(node);
  return static_cast<int>(nodes_.size()) - 1;
}

std::uint64_t KdTree::insert(const Vec3& p) {
  const std::uint64_t id = next_id_++;
  if (root_ < 0) {
    root_ = new_node(p, id, 0);
    return id;
  }

  std::vector<int> path;
  int n = root_;
  while (true) {
    path.push_back(n);
    Node& nd = nodes_[n];
    ++nd.size;
    ++nd.alive;
    nd.box.extend(p);
    const bool go_left = p[nd.axis] < nd.point[nd.axis];
    const int child = go_left ? nd.left : nd.right;
    if (child >= 0) {
      n = child;
      continue;
    }
    const auto axis = static_cast<std::uint8_t>((nd.axis + 1) % 3);
    const int leaf = new_node(p, id, axis);
    if (go_left) {
      nodes_[n].left = leaf;
    } else {
      nodes_[n].right = leaf;
    }
    break;
  }

  // Rebuild the topmost subtree on the path that lost its balance.
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Node& nd = nodes_[path[i]];
    if (nd.size < options_.min_rebuild_size) break;
    const int ls = nd.left < 0 ? 0 : nodes_[nd.left].size;
    const int rs = nd.right < 0 ? 0 : nodes_[nd.right].size;
    if (std::max(ls, rs) > options_.balance_alpha * nd.size) {
      const int fresh = rebuild(path[i]);
      if (i == 0) {
        root_ = fresh;
      } else {
        Node& parent = nodes_[path[i - 1]];
        (parent.left == path[i] ? parent.left : parent.right) = fresh;
      }
      break;
    }
  }
  return id;
}

void KdTree::insert(std::span<const Vec3> points) {
  for (const Vec3& p : points) insert(p);
}

void KdTree::collect(int n, std::vector<Item>& items, bool free_nodes) {
  if (n < 0) return;
  const Node& nd = nodes_[n];
  if (!nd.deleted) items.push_back({nd.point, nd.id});
  const int l = nd.left, r = nd.right;
  if (free_nodes) free_.push_back(n);
  collect(l, items, free_nodes);
  collect(r, items, free_nodes);
}

int KdTree::rebuild(int n) {
  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(nodes_[n].alive));
  collect(n, items, true);
  return build(items, 0, items.size());
}

int KdTree::build(std::vector<Item>& items, std::size_t lo, std::size_t hi) {
  if (lo >= hi) return -1;
  Eigen::AlignedBox3d box;
  for (std::size_t i = lo; i < hi; ++i) box.extend(items[i].point);
  int axis = 0;
  box.sizes().maxCoeff(&axis);

  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(items.begin() + static_cast<std::ptrdiff_t>(lo), items.begin() + static_cast<std::ptrdiff_t>(mid),
                   items.begin() + static_cast<std::ptrdiff_t>(hi), [axis](const Item& a, const Item& b) {
                     return a.point[axis] < b.point[axis] || (a.point[axis] == b.point[axis] && a.id < b.id);
                   });
  const int n = new_node(items[mid].point, items[mid].id, static_cast<std::uint8_t>(axis));
  const int l = build(items, lo, mid);
  const int r = build(items, mid + 1, hi);
  nodes_[n].left = l;
  nodes_[n].right = r;
  refresh(n);
  return n;
}

void KdTree::refresh(int n) {
  Node& nd = nodes_[n];
  nd.size = 1;
  nd.alive = nd.deleted ? 0 : 1;
  nd.box = Eigen::AlignedBox3d(nd.point, nd.point);
  for (const int c : {nd.left, nd.right}) {
    if (c < 0) continue;
    nd.size += nodes_[c].size;
    nd.alive += nodes_[c].alive;
    nd.box.extend(nodes_[c].box);
  }
}

std::vector<KdTree::Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> best;
  if (k == 0 || root_ < 0) return best;
  best.reserve(k + 1);

  auto search = [&](auto&& self, int n) -> void {
    if (n < 0) return;
    const Node& nd = nodes_[n];
    if (nd.alive == 0) return;
    if (best.size() == k && nd.box.squaredExteriorDistance(query) > best.back().squared_distance) return;

    if (!nd.deleted) {
      const double d = (nd.point - query).squaredNorm();
      if (best.size() < k || closer(d, nd.id, best.back().squared_distance, best.back().id)) {
        auto pos = std::find_if(best.begin(), best.end(),
                                [&](const Neighbor& b) { return closer(d, nd.id, b.squared_distance, b.id); });
        best.insert(pos, Neighbor{nd.point, nd.id, d});
        if (best.size() > k) best.pop_back();
      }
    }

    const int l = nd.left, r = nd.right;
    const double dl = l < 0 ? 0.0 : nodes_[l].box.squaredExteriorDistance(query);
    const double dr = r < 0 ? 0.0 : nodes_[r].box.squaredExteriorDistance(query);
    if (dl <= dr) {
      self(self, l);
      self(self, r);
    } else {
      self(self, r);
      self(self, l);
    }
  };
  search(search, root_);
  return best;
}

template <typename Outside, typename Contains>
std::size_t KdTree::remove_if(int n, const Outside& skip_subtree, const Contains& contains,
                              std::vector<Vec3>* removed) {
  if (n < 0) return 0;
  if (nodes_[n].alive == 0 || skip_subtree(nodes_[n].box)) return 0;
  std::size_t count = 0;
  Node& nd = nodes_[n];
  if (!nd.deleted && contains(nd.point)) {
    nd.deleted = true;
    ++count;
    if (removed) removed->push_back(nd.point);
  }
  count += remove_if(nodes_[n].left, skip_subtree, contains, removed);
  count += remove_if(nodes_[n].right, skip_subtree, contains, removed);
  nodes_[n].alive -= static_cast<int>(count);
  return count;
}

void KdTree::rebalance_deleted(int& n) {
  if (n < 0) return;
  const Node& nd = nodes_[n];
  if (nd.alive == 0 || (nd.size >= options_.min_rebuild_size && nd.alive < (1.0 - options_.delete_alpha) * nd.size)) {
    n = rebuild(n);
    return;
  }
  int l = nd.left, r = nd.right;
  rebalance_deleted(l);
  rebalance_deleted(r);
  nodes_[n].left = l;
  nodes_[n].right = r;
  refresh(n);
}

std::size_t KdTree::remove_outside(const Vec3& center, double radius, std::vector<Vec3>* removed) {
  const double r2 = radius * radius;
  auto all_inside = [&](const Eigen::AlignedBox3d& box) {
    const Vec3 far = (box.min() - center).cwiseAbs().cwiseMax((box.max() - center).cwiseAbs());
    return far.squaredNorm() <= r2;
  };
  auto outside = [&](const Vec3& p) { return (p - center).squaredNorm() > r2; };
  const std::size_t count = remove_if(root_, all_inside, outside, removed);
  if (count > 0) rebalance_deleted(root_);
  return count;
}

std::size_t KdTree::remove_box(const Eigen::AlignedBox3d& box, std::vector<Vec3>* removed) {
  auto disjoint = [&](const Eigen::AlignedBox3d& b) { return !box.intersects(b); };
  auto inside = [&](const Vec3& p) { return box.contains(p); };
  const std::size_t count = remove_if(root_, disjoint, inside, removed);
  if (count > 0) rebalance_deleted(root_);
  return count;
}

std::vector<Vec3> KdTree::points() const {
  std::vector<Item> items;
  auto walk = [&](auto&& self, int n) -> void {
    if (n < 0) return;
    const Node& nd = nodes_[n];
    if (!nd.deleted) items.push_back({nd.point, nd.id});
    self(self, nd.left);
    self(self, nd.right);
  };
  walk(walk, root_);
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });
  std::vector<Vec3> out;
  out.reserve(items.size());
  for (const Item& it : items) out.push_back(it.point);
  return out;
}

void KdTree::clear() {
  nodes_.clear();
  free_.clear();
  root_ = -1;
}

int KdTree::height(int n) const {
  if (n < 0) return 0;
  return 1 + std::max(height(nodes_[n].left), height(nodes_[n].right));
}

}  // namespace rio

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "rio/kd_tree.hpp"
#include "rio/local_map.hpp"
#include "support.hpp"

namespace rio {
namespace {

struct Ref {
  Vec3 p;
  std::uint64_t id;
  bool alive = true;
};

std::vector<std::pair<double, std::uint64_t>> brute_knn(const std::vector<Ref>& pts, const Vec3& q, std::size_t k) {
  std::vector<std::pair<double, std::uint64_t>> all;
  for (const Ref& r : pts) {
    if (r.alive) all.emplace_back((r.p - q).squaredNorm(), r.id);
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

void expect_knn_matches(const KdTree& tree, const std::vector<Ref>& ref, const Vec3& q, std::size_t k) {
  const auto got = tree.knn(q, k);
  const auto want = brute_knn(ref, q, k);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].id, want[i].second);
    EXPECT_EQ(got[i].squared_distance, want[i].first);
    EXPECT_EQ(got[i].point, ref[got[i].id].p);
  }
}

TEST(KdTree, KnnMatchesBruteForceAfterManyInserts) {
  std::mt19937_64 rng(41);
  KdTree tree;
  std::vector<Ref> ref;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 p = test::random_vec(rng, 200.0);
    ref.push_back({p, tree.insert(p)});
  }
  EXPECT_EQ(tree.size(), 100000u);
  EXPECT_LT(tree.height(), 60);
  for (int i = 0; i < 100; ++i) expect_knn_matches(tree, ref, test::random_vec(rng, 220.0), 10);
}

TEST(KdTree, TiesBrokenByInsertionOrder) {
  KdTree tree;
  std::vector<Ref> ref;
  for (int i = 0; i < 50; ++i) {
    const Vec3 p = Vec3(i % 2 ? 1.0 : -1.0, 0.0, 0.0);
    ref.push_back({p, tree.insert(p)});
  }
  const auto nn = tree.knn(Vec3::Zero(), 7);
  ASSERT_EQ(nn.size(), 7u);
  for (std::size_t i = 0; i < nn.size(); ++i) EXPECT_EQ(nn[i].id, i);
}

TEST(KdTree, RemovalsMatchBruteForce) {
  std::mt19937_64 rng(42);
  KdTree tree;
  std::vector<Ref> ref;
  for (int round = 0; round < 5; ++round) {
    for (int i = 0; i < 5000; ++i) {
      const Vec3 p = test::random_vec(rng, 100.0) + Vec3(30.0 * round, 0.0, 0.0);
      ref.push_back({p, tree.insert(p)});
    }
    const Vec3 center(30.0 * round, 0.0, 0.0);
    std::vector<Vec3> removed;
    const std::size_t n = tree.remove_outside(center, 90.0, &removed);
    std::size_t expected = 0;
    for (Ref& r : ref) {
      if (r.alive && (r.p - center).norm() > 90.0) {
        r.alive = false;
        ++expected;
      }
    }
    EXPECT_EQ(n, expected);
    EXPECT_EQ(removed.size(), expected);
    const Eigen::AlignedBox3d box(center - Vec3(10, 10, 10), center + Vec3(10, 10, 10));
    const std::size_t nb = tree.remove_box(box);
    std::size_t expected_box = 0;
    for (Ref& r : ref) {
      if (r.alive && box.contains(r.p)) {
        r.alive = false;
        ++expected_box;
      }
    }
    EXPECT_EQ(nb, expected_box);
    for (int i = 0; i < 20; ++i) expect_knn_matches(tree, ref, test::random_vec(rng, 120.0) + center, 8);
  }
  std::size_t alive = 0;
  for (const Ref& r : ref) alive += r.alive;
  EXPECT_EQ(tree.size(), alive);
  const auto pts = tree.points();
  ASSERT_EQ(pts.size(), alive);
  std::size_t j = 0;
  for (const Ref& r : ref) {
    if (r.alive) EXPECT_EQ(pts[j++], r.p);
  }
}

TEST(KdTree, EmptyTree) {
  KdTree tree;
  EXPECT_TRUE(tree.empty());
  EXPECT_TRUE(tree.knn(Vec3::Zero(), 5).empty());
  EXPECT_EQ(tree.remove_outside(Vec3::Zero(), 1.0), 0u);
  tree.insert(Vec3(1, 2, 3));
  EXPECT_EQ(tree.knn(Vec3::Zero(), 5).size(), 1u);
  tree.clear();
  EXPECT_TRUE(tree.empty());
}

TEST(LocalMap, InsertGrowsByPointCount) {
  LocalMapOptions o;
  o.dedup = false;
  LocalMap map(o);
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)};
  EXPECT_EQ(map.insert(pts), 3u);
  EXPECT_EQ(map.size(), 3u);
}

TEST(LocalMap, DedupSuppressesSameVoxel) {
  LocalMap map;
  std::vector<Vec3> pts = {Vec3(0.1, 0.1, 0.1), Vec3(0.2, 0.2, 0.2), Vec3(0.7, 0.1, 0.1)};
  EXPECT_EQ(map.insert(pts), 2u);
}

TEST(LocalMap, TrimAfterMoving) {
  std::mt19937_64 rng(43);
  LocalMapOptions o;
  o.radius = 50.0;
  o.hysteresis = 5.0;
  LocalMap map(o);
  map.update_center(Vec3::Zero());
  std::vector<Vec3> pts;
  for (int i = 0; i < 2000; ++i) pts.push_back(test::random_vec(rng, 30.0));
  map.insert(pts);
  const std::size_t before = map.size();
  EXPECT_EQ(map.update_center(Vec3(3.0, 0.0, 0.0)), 0u);  // within hysteresis
  EXPECT_EQ(map.update_center(Vec3(2.0 * o.radius, 0.0, 0.0)), before);
  EXPECT_TRUE(map.empty());
}

TEST(LocalMap, NoPointOutsideRadiusAfterTrim) {
  std::mt19937_64 rng(44);
  LocalMapOptions o;
  o.radius = 40.0;
  o.hysteresis = 4.0;
  LocalMap map(o);
  Vec3 pos = Vec3::Zero();
  for (int step = 0; step < 60; ++step) {
    pos += Vec3(2.5, 0.7, 0.0);
    map.update_center(pos);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(pos + test::random_vec(rng, 60.0));
    map.insert(pts);
    for (const Vec3& p : map.tree().points()) {
      EXPECT_LE((p - *map.center()).norm(), o.radius + 1e-9);
    }
  }
}

}  // namespace
}  // namespace rio

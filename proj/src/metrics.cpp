#include "rio/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace rio {

Alignment parse_alignment(std::string_view name) {
  if (name == "first") return Alignment::kFirstPose;
  if (name == "none") return Alignment::kNone;
  if (name == "umeyama") return Alignment::kUmeyama;
  throw Error("unknown alignment '" + std::string(name) + "'");
}

std::vector<std::pair<std::size_t, std::size_t>> associate(const std::vector<StampedPose>& est,
                                                           const std::vector<StampedPose>& gt, double max_dt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est[i].t;
    auto it = std::lower_bound(gt.begin(), gt.end(), t, [](const StampedPose& g, double v) { return g.t < v; });
    std::size_t best = gt.size();
    double best_dt = max_dt;
    if (it != gt.end() && std::abs(it->t - t) <= best_dt) {
      best = static_cast<std::size_t>(it - gt.begin());
      best_dt = std::abs(it->t - t);
    }
    if (it != gt.begin() && std::abs(std::prev(it)->t - t) < best_dt) {
      best = static_cast<std::size_t>(std::prev(it) - gt.begin());
    }
    if (best < gt.size()) pairs.emplace_back(i, best);
  }
  return pairs;
}

namespace {

/// Transform T applied on the left of every estimated pose.
Pose alignment_transform(const std::vector<StampedPose>& est, const std::vector<StampedPose>& gt,
                         const std::vector<std::pair<std::size_t, std::size_t>>& pairs, Alignment alignment) {
  switch (alignment) {
    case Alignment::kNone:
      return Pose{};
    case Alignment::kFirstPose: {
      const auto [i, j] = pairs.front();
      return gt[j].pose * est[i].pose.inverse();
    }
    case Alignment::kUmeyama: {
      Eigen::Matrix3Xd src(3, static_cast<Eigen::Index>(pairs.size()));
      Eigen::Matrix3Xd dst(3, static_cast<Eigen::Index>(pairs.size()));
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        src.col(static_cast<Eigen::Index>(k)) = est[pairs[k].first].pose.translation;
        dst.col(static_cast<Eigen::Index>(k)) = gt[pairs[k].second].pose.translation;
      }
      const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
      return Pose{Rotation::from_matrix(t.topLeftCorner<3, 3>()), t.topRightCorner<3, 1>()};
    }
  }
  return Pose{};
}

}  // namespace

std::vector<double> translation_errors(const std::vector<StampedPose>& est, const std::vector<StampedPose>& gt,
                                       Alignment alignment, double max_dt) {
  const auto pairs = associate(est, gt, max_dt);
  std::vector<double> out;
  if (pairs.empty()) return out;
  const Pose align = alignment_transform(est, gt, pairs, alignment);
  for (const auto& [i, j] : pairs) out.push_back(((align * est[i].pose).translation - gt[j].pose.translation).norm());
  return out;
}

ApeResult ape_rmse(const std::vector<StampedPose>& est, const std::vector<StampedPose>& gt, Alignment alignment,
                   double max_dt, std::size_t min_pairs) {
  const auto pairs = associate(est, gt, max_dt);
  if (pairs.size() < min_pairs || pairs.empty()) {
    throw Error("only " + std::to_string(pairs.size()) + " associated poses, need " + std::to_string(min_pairs));
  }
  const Pose align = alignment_transform(est, gt, pairs, alignment);
  double se_t = 0.0, se_r = 0.0;
  for (const auto& [i, j] : pairs) {
    const Pose e = align * est[i].pose;
    se_t += (e.translation - gt[j].pose.translation).squaredNorm();
    const double angle = log_so3(gt[j].pose.rotation.inverse() * e.rotation).norm();
    se_r += angle * angle;
  }
  const double n = static_cast<double>(pairs.size());
  ApeResult r;
  r.pairs = pairs.size();
  r.translation_rmse = std::sqrt(se_t / n);
  r.rotation_rmse_deg = std::sqrt(se_r / n) * 180.0 / M_PI;
  return r;
}

double loop_closure_error(const std::vector<StampedPose>& est) {
  if (est.size() < 2) throw Error("loop closure error needs at least two poses");
  return (est.back().pose.translation - est.front().pose.translation).norm();
}

}  // namespace rio

#pragma once

#include <string_view>
#include <vector>

#include "rio/io.hpp"

namespace rio {

enum class Alignment {
  kFirstPose,  // est mapped so its first associated pose coincides with gt
  kNone,
  kUmeyama,  // least-squares SE(3) fit of the associated positions
};

Alignment parse_alignment(std::string_view name);

struct ApeResult {
  double translation_rmse = 0.0;  // m
  double rotation_rmse_deg = 0.0;
  std::size_t pairs = 0;
};

/// Nearest-timestamp association of est to gt within `max_dt` seconds.
/// Returns (est index, gt index) pairs in est order.
std::vector<std::pair<std::size_t, std::size_t>> associate(const std::vector<StampedPose>& est,
                                                           const std::vector<StampedPose>& gt, double max_dt = 0.01);

/// Absolute pose error RMSE. Throws when fewer than `min_pairs` poses associate.
ApeResult ape_rmse(const std::vector<StampedPose>& est, const std::vector<StampedPose>& gt,
                   Alignment alignment = Alignment::kFirstPose, double max_dt = 0.01, std::size_t min_pairs = 10);

/// Per-pair translation errors after alignment, in est order.
std::vector<double> translation_errors(const std::vector<StampedPose>& est, const std::vector<StampedPose>& gt,
                                       Alignment alignment = Alignment::kFirstPose, double max_dt = 0.01);

/// Distance between the first and last positions.
double loop_closure_error(const std::vector<StampedPose>& est);

}  // namespace rio

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rio/config.hpp"
#include "rio/io.hpp"
#include "rio/map_localizer.hpp"

namespace rio {

struct TimingStats {
  double min = std::numeric_limits<double>::infinity();  // ms
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;

  void add(double ms);
};

struct TimingReport {
  TimingStats imu_predict;
  TimingStats doppler_fusion;
  TimingStats cloud_match;
  TimingStats total;

  /// One line per category: "<Name> Min <ms> Max <ms> Mean <ms> Count <n>".
  std::string format() const;
};

/// Per-scan outcome, also rendered into the event log.
struct ScanReport {
  double t = 0.0;
  std::size_t points = 0;
  DopplerGateResult gate;
  bool doppler_applied = false;
  std::size_t filtered_points = 0;  // after the SNR filter
  bool matched = false;
  int iterations = 0;
  std::size_t matches = 0;
  bool prior_update = false;
  std::size_t map_size = 0;
};

/// Radar-inertial odometry event loop: IMU propagation, Doppler gating and
/// update, scan-to-map matching, local-map upkeep and optional prior-map
/// keyframe updates. Feed events in timestamp order.
class Pipeline {
 public:
  explicit Pipeline(const PipelineConfig& config, const PriorMap* prior_map = nullptr);

  /// Poses used to seed position and heading at initialization.
  void set_reference(std::vector<StampedPose> reference) { reference_ = std::move(reference); }

  void add_imu(const ImuSample& u);

  /// Processes one scan; returns the body pose once the filter is running.
  std::optional<StampedPose> add_scan(const RadarScan& scan);

  bool initialized() const { return initialized_; }
  const NavState& state() const { return x_; }
  const ErrorCovariance& covariance() const { return p_; }
  const LocalMap& local_map() const { return map_; }
  const ScanReport& last_scan() const { return last_; }
  const TimingReport& timing() const { return timing_; }
  const std::vector<std::string>& events() const { return events_; }

 private:
  bool try_initialize(const RadarScan& scan);
  void propagate_to(double t);
  void log(std::string line) { events_.push_back(std::move(line)); }

  PipelineConfig config_;
  MatchOptions match_;
  const PriorMap* prior_map_;
  std::vector<StampedPose> reference_;

  bool initialized_ = false;
  NavState x_;
  ErrorCovariance p_ = ErrorCovariance::Identity();
  std::vector<ImuSample> init_buffer_;
  std::optional<ImuSample> last_imu_;
  std::optional<double> last_scan_t_;
  double pending_predict_ms_ = 0.0;

  LocalMap map_;
  KeyframeAccumulator keyframes_;
  std::size_t frame_ = 0;
  ScanReport last_;
  TimingReport timing_;
  std::vector<std::string> events_;
};

struct PipelineOutput {
  std::vector<StampedPose> trajectory;
  std::vector<std::string> events;
  TimingReport timing;
  std::size_t final_map_size = 0;
};

using ScanObserver = std::function<void(std::size_t scan_index, const Pipeline&)>;

/// Replays a dataset in global timestamp order (IMU before radar on ties).
PipelineOutput run_pipeline(const Dataset& dataset, const PipelineConfig& config, const PriorMap* prior_map = nullptr,
                            const ScanObserver& observer = {});

}  // namespace rio

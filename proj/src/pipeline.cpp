#include "rio/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace rio {

void TimingStats::add(double ms) {
  min = std::min(min, ms);
  max = std::max(max, ms);
  ++count;
  mean += (ms - mean) / static_cast<double>(count);
}

std::string TimingReport::format() const {
  std::string out;
  auto line = [&out](const char* name, const TimingStats& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s Min %.4f Max %.4f Mean %.4f Count %zu\n", name, s.count ? s.min : 0.0,
                  s.max, s.mean, s.count);
    out += buf;
  };
  line("ImuPredict", imu_predict);
  line("DopplerFusion", doppler_fusion);
  line("CloudMatch", cloud_match);
  line("TotalTime", total);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

bool uses_doppler_update(Mode m) { return m == Mode::kFull || m == Mode::kDopplerOnly; }
bool uses_matching(Mode m) { return m != Mode::kDopplerOnly; }

}  // namespace

Pipeline::Pipeline(const PipelineConfig& config, const PriorMap* prior_map)
    : config_(config),
      prior_map_(prior_map && prior_map->size() > 0 ? prior_map : nullptr),
      map_(config.local_map),
      keyframes_(config.keyframe) {
  config_.gate.estimate_extrinsics = config_.estimate_extrinsics;
  match_ = config_.match;
  match_.update.estimate_extrinsics = config_.estimate_extrinsics;
  match_.update.joseph_form = config_.joseph_form;
  if (config_.mode == Mode::kP2pOnly) match_.neighborhood.neighbors = 1;
  log("mode " + std::string(mode_name(config_.mode)));
  if (prior_map_) log(fmt("prior_map points=%zu", prior_map_->size()));
}

void Pipeline::add_imu(const ImuSample& u) {
  validate(u);
  if (last_imu_ && u.timestamp - last_imu_->timestamp > config_.gap_warning) {
    log(fmt("warn imu_gap t=%.6f gap=%.6f", u.timestamp, u.timestamp - last_imu_->timestamp));
  }
  if (!initialized_) {
    init_buffer_.push_back(u);
    last_imu_ = u;
    return;
  }
  const auto start = Clock::now();
  propagate_to(u.timestamp);
  last_imu_ = u;
  pending_predict_ms_ += elapsed_ms(start);
}

void Pipeline::propagate_to(double t) {
  if (!last_imu_) return;
  while (x_.timestamp < t) {
    const double dt = std::min(t - x_.timestamp, kMaxPropagationStep);
    p_ = propagate_covariance(p_, x_, *last_imu_, dt, config_.imu);
    x_ = propagate_nominal(x_, *last_imu_, dt, config_.imu.gravity);
    if (t - x_.timestamp < 1e-12) x_.timestamp = t;
  }
}

bool Pipeline::try_initialize(const RadarScan& scan) {
  // Static window: the last second of IMU data before the scan.
  const double window_start = scan.timestamp - 1.0;
  std::vector<ImuSample> window;
  for (const ImuSample& u : init_buffer_) {
    if (u.timestamp >= window_start && u.timestamp <= scan.timestamp) window.push_back(u);
  }
  if (window.size() < config_.init.min_samples) {
    log(fmt("init_wait t=%.6f imu=%zu", scan.timestamp, window.size()));
    return false;
  }

  std::optional<ExternalPose> external;
  if (config_.init_from_ground_truth && !reference_.empty()) {
    auto it = std::min_element(reference_.begin(), reference_.end(), [&](const StampedPose& a, const StampedPose& b) {
      return std::abs(a.t - scan.timestamp) < std::abs(b.t - scan.timestamp);
    });
    external = ExternalPose{it->pose.translation, to_rpy(it->pose.rotation).z()};
  }

  std::optional<Vec3> body_velocity;
  if (config_.init_velocity_from_radar) {
    if (auto ego = ransac_ego_velocity(scan.points, config_.ransac)) {
      Vec3 gyro = window.back().gyro;
      if (config_.init.estimate_gyro_bias) {
        Vec3 mean = Vec3::Zero();
        for (const ImuSample& u : window) mean += u.gyro;
        gyro -= mean / static_cast<double>(window.size());
      }
      const Pose& ext = config_.init.extrinsics;
      body_velocity = ext.rotation * ego->velocity - gyro.cross(ext.translation);
    } else {
      log(fmt("warn init_velocity_fallback t=%.6f", scan.timestamp));
    }
  }

  try {
    std::tie(x_, p_) = initialize(window, body_velocity, external, config_.imu, config_.init);
  } catch (const Error& e) {
    log(fmt("init_wait t=%.6f reason=", scan.timestamp) + e.what());
    return false;
  }
  last_imu_ = window.back();
  propagate_to(scan.timestamp);
  initialized_ = true;
  init_buffer_.clear();
  init_buffer_.shrink_to_fit();
  log(fmt("init t=%.6f p=%.6f,%.6f,%.6f v=%.6f,%.6f,%.6f", scan.timestamp, x_.position.x(), x_.position.y(),
          x_.position.z(), x_.velocity.x(), x_.velocity.y(), x_.velocity.z()));
  return true;
}

std::optional<StampedPose> Pipeline::add_scan(const RadarScan& scan) {
  if (last_scan_t_ && scan.timestamp - *last_scan_t_ > config_.gap_warning) {
    log(fmt("warn radar_gap t=%.6f gap=%.6f", scan.timestamp, scan.timestamp - *last_scan_t_));
  }
  last_scan_t_ = scan.timestamp;
  if (!initialized_ && !try_initialize(scan)) return std::nullopt;

  const double earlier_predict_ms = pending_predict_ms_;
  pending_predict_ms_ = 0.0;
  const auto start = Clock::now();
  propagate_to(scan.timestamp);
  const double predict_ms = earlier_predict_ms + elapsed_ms(start);

  ScanReport report;
  report.t = scan.timestamp;
  report.points = scan.points.size();

  // Doppler gating (every mode) and velocity update.
  const auto doppler_start = Clock::now();
  const Vec3 gyro = last_imu_ ? last_imu_->gyro : Vec3::Zero();
  report.gate = gate_doppler(scan, x_, p_, gyro, config_.radar, config_.gate);
  if (uses_doppler_update(config_.mode) && !report.gate.skip_update) {
    std::tie(x_, p_) = doppler_update(x_, p_, report.gate.inlier_residuals, config_.estimate_extrinsics,
                                      config_.joseph_form);
    report.doppler_applied = true;
  }
  const double doppler_ms = elapsed_ms(doppler_start);

  const auto match_start = Clock::now();
  std::vector<RadarPoint> inliers;
  inliers.reserve(report.gate.inliers.size());
  for (const std::size_t i : report.gate.inliers) inliers.push_back(scan.points[i]);
  const std::vector<RadarPoint> kept = snr_filter(inliers, config_.snr_keep_fraction, config_.snr_min_points);
  report.filtered_points = kept.size();
  const std::vector<ScanPoint> points = prepare_scan(kept, config_.radar);

  if (uses_matching(config_.mode)) {
    if (!map_.empty()) {
      const IteratedUpdateResult r = match_scan(x_, p_, points, map_.tree(), match_);
      if (r.applied) {
        x_ = r.state;
        p_ = r.covariance;
      }
      report.matched = r.applied;
      report.iterations = r.iterations;
      report.matches = r.matches;
    }
    augment_map(map_, points, x_);
  }

  if (prior_map_) {
    KeyframeSource src{frame_, scan.timestamp, x_.radar_pose(), points};
    if (auto kf = keyframes_.add(std::move(src))) {
      const IteratedUpdateResult r = prior_map_update(x_, p_, *kf, *prior_map_, match_);
      if (r.applied) {
        x_ = r.state;
        p_ = r.covariance;
      }
      report.prior_update = r.applied;
    }
  }
  ++frame_;
  report.map_size = map_.size();
  const double match_ms = elapsed_ms(match_start);

  timing_.imu_predict.add(predict_ms);
  timing_.doppler_fusion.add(doppler_ms);
  timing_.cloud_match.add(match_ms);
  timing_.total.add(earlier_predict_ms + elapsed_ms(start));

  log(fmt("scan t=%.6f n=%zu doppler_in=%zu doppler_out=%zu doppler=%d snr_kept=%zu matched=%d iter=%d "
          "matches=%zu prior=%d map=%zu",
          scan.timestamp, report.points, report.gate.inliers.size(), report.gate.outliers.size(),
          report.doppler_applied ? 1 : 0, report.filtered_points, report.matched ? 1 : 0, report.iterations,
          report.matches, report.prior_update ? 1 : 0, report.map_size));
  last_ = std::move(report);
  return StampedPose{scan.timestamp, x_.body_pose()};
}

PipelineOutput run_pipeline(const Dataset& dataset, const PipelineConfig& config, const PriorMap* prior_map,
                            const ScanObserver& observer) {
  Pipeline pipeline(config, prior_map);
  pipeline.set_reference(dataset.ground_truth);
  PipelineOutput out;
  out.trajectory.reserve(dataset.radar.size());

  std::size_t i = 0, j = 0;
  while (i < dataset.imu.size() || j < dataset.radar.size()) {
    const bool imu_next =
        j >= dataset.radar.size() || (i < dataset.imu.size() && dataset.imu[i].timestamp <= dataset.radar[j].timestamp);
    if (imu_next) {
      pipeline.add_imu(dataset.imu[i++]);
      continue;
    }
    if (auto pose = pipeline.add_scan(dataset.radar[j])) {
      out.trajectory.push_back(*pose);
      if (observer) observer(j, pipeline);
    }
    ++j;
  }
  out.events = pipeline.events();
  out.timing = pipeline.timing();
  out.final_map_size = pipeline.local_map().size();
  return out;
}

}  // namespace rio

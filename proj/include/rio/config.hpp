#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "rio/map_localizer.hpp"
#include "rio/radar.hpp"
#include "rio/scan_matcher.hpp"
#include "rio/sim.hpp"

namespace rio {

enum class Mode { kFull, kDopplerOnly, kP2dOnly, kP2pOnly };

Mode parse_mode(std::string_view name);
std::string_view mode_name(Mode mode);

struct PipelineConfig {
  PipelineConfig() { init.extrinsics = sim::SensorSpec{}.extrinsics; }

  Mode mode = Mode::kFull;
  ImuNoiseParams imu;
  RadarNoiseParams radar;
  InitOptions init;
  /// Take the initial position and heading from the first ground-truth
  /// record of the dataset when present.
  bool init_from_ground_truth = true;
  /// Seed the initial velocity from a RANSAC ego-velocity fit of the first scan.
  bool init_velocity_from_radar = true;
  DopplerGateOptions gate;
  RansacOptions ransac;
  double snr_keep_fraction = 0.95;
  std::size_t snr_min_points = 5;
  MatchOptions match;
  LocalMapOptions local_map;
  KeyframeOptions keyframe;
  bool estimate_extrinsics = false;
  bool joseph_form = false;
  double gap_warning = 1.0;  // s
};

/// Thrown for malformed or unknown configuration entries.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Applies `key = value` lines to `config`. Blank lines and `#` comments are
/// ignored; an unknown key or malformed value throws with the line number.
void parse_config(std::istream& in, PipelineConfig& config);
PipelineConfig load_config(const std::string& path);

/// Writes every key with its current value, in the parser's format.
void write_config(std::ostream& out, const PipelineConfig& config);

void parse_scenario(std::istream& in, sim::Scenario& scenario);
sim::Scenario load_scenario(const std::string& path);
void write_scenario(std::ostream& out, const sim::Scenario& scenario);

}  // namespace rio

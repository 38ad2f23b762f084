#pragma once

#include <cstdint>
#include <vector>

#include "rio/ins.hpp"
#include "rio/radar.hpp"

namespace rio::sim {

enum class TrajectoryType { kHover, kCircle, kFigureEight };
enum class WorldType { kStructured, kGround };

struct TrajectorySpec {
  TrajectoryType type = TrajectoryType::kFigureEight;
  Vec3 center = Vec3(0.0, 0.0, 50.0);  // altitude in z
  double size_x = 140.0;  // circle radius, or figure-eight x half-extent
  double size_y = 190.0;  // figure-eight y extent parameter (y = size_y/2 sin 2s)
  double z_amplitude = 2.0;
  double speed = 10.0;           // nominal cruise speed, m/s
  double duration = 105.0;       // s
  double hover_duration = 2.0;   // static lead-in, s
  double ramp_duration = 3.0;    // smooth acceleration to cruise, s
  double max_speed = 30.0;
  double max_acceleration = 15.0;
};

struct WorldSpec {
  WorldType type = WorldType::kStructured;
  Vec3 center = Vec3::Zero();
  double size_x = 700.0;
  double size_y = 600.0;
  double density = 1.0;  // points per m^2
  int buildings = 150;
  double building_min_size = 10.0;
  double building_max_size = 40.0;
  double building_min_height = 5.0;
  double building_max_height = 30.0;
};

struct SensorSpec {
  double imu_rate = 250.0;
  double radar_rate = 20.0;
  int min_points = 200;
  int max_points = 300;
  double fov_azimuth = 50.0 * M_PI / 180.0;    // half-angle
  double fov_elevation = 25.0 * M_PI / 180.0;  // half-angle
  double min_range = 1.0;
  double max_range = 200.0;
  Pose extrinsics{from_rpy(0.0, M_PI / 2.0, 0.0), Vec3(0.1, 0.0, -0.1)};
};

struct Scenario {
  std::uint64_t seed = 1;
  TrajectorySpec trajectory;
  WorldSpec world;
  SensorSpec sensors;
  RadarNoiseParams radar_noise;
  ImuNoiseParams imu_noise;
  Vec3 gyro_bias = Vec3(0.002, -0.003, 0.001);
  Vec3 accel_bias = Vec3(0.03, -0.02, 0.05);
  /// Disables every noise source and the bias random walk.
  bool noiseless = false;
  double dynamic_rate = 0.05;
  double dynamic_offset_sigmas = 10.0;  // Doppler offset in units of sigma_doppler
  double snr_mean = 20.0;
  double snr_std = 4.0;
  double low_snr_rate = 0.05;
  double low_snr_mean = 6.0;
  double low_snr_noise_scale = 2.0;
};

struct TrajectorySample {
  double t = 0.0;
  Pose pose;  // body -> world
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  // body frame
};

/// Smooth analytic trajectory: a path parameterized by s(t), where s(t) holds
/// still during the hover lead-in and blends to a constant rate with a
/// quintic (smootherstep) rate profile.
class Trajectory {
 public:
  explicit Trajectory(const TrajectorySpec& spec);

  TrajectorySample at(double t) const;
  /// Position with optional analytic velocity and acceleration.
  Vec3 position(double t, Vec3* vel = nullptr, Vec3* acc = nullptr) const;
  double duration() const { return spec_.duration; }
  const TrajectorySpec& spec() const { return spec_; }

  /// Arc length over [0, duration], numerically integrated.
  double path_length() const;

 private:
  struct PathPoint {
    Vec3 p, dp, ddp;  // derivatives w.r.t. s
  };
  PathPoint path(double s) const;
  void time_warp(double t, double& s, double& ds, double& dds) const;
  Rotation attitude(double t) const;

  TrajectorySpec spec_;
  double rate_ = 0.0;  // ds/dt at cruise
};

/// Builds and validates a trajectory; throws rio::Error when the sampled
/// speed or acceleration exceed the spec's bounds.
Trajectory generate_trajectory(const TrajectorySpec& spec);

std::vector<Vec3> generate_world(const WorldSpec& spec, std::uint64_t seed);

struct ImuStream {
  std::vector<ImuSample> samples;
  std::vector<Vec3> gyro_bias;   // truth, per sample
  std::vector<Vec3> accel_bias;  // truth, per sample
};

/// IMU samples at the configured rate. Sample i holds the mean rates over
/// [t_i, t_i+1): w = Log(R_i^T R_i+1)/dt and f = R_i^T((v_i+1 - v_i)/dt - g),
/// plus biases and white noise.
ImuStream synthesize_imu(const Trajectory& traj, const Scenario& s);

struct LabeledScan {
  RadarScan scan;
  std::vector<bool> dynamic;  // aligned with scan.points
};

std::vector<LabeledScan> synthesize_radar(const Trajectory& traj, const std::vector<Vec3>& world, const Scenario& s);

struct GroundTruthPose {
  double t = 0.0;
  Pose pose;
};

struct SimulatedData {
  ImuStream imu;
  std::vector<LabeledScan> radar;
  std::vector<GroundTruthPose> ground_truth;  // at radar timestamps
  std::vector<Vec3> world;
  double path_length = 0.0;
};

SimulatedData simulate(const Scenario& s);

}  // namespace rio::sim

#include "rio/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace rio::sim {

namespace {

constexpr double kGravity = 9.81;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double loop_length(double a, double b) {
  constexpr int kSteps = 8192;
  double len = 0.0;
  Vec3 prev(0.0, 0.0, 0.0);
  for (int i = 1; i <= kSteps; ++i) {
    const double s = 2.0 * M_PI * i / kSteps;
    const Vec3 p(a * std::sin(s), 0.5 * b * std::sin(2.0 * s), 0.0);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

}  // namespace

Trajectory::Trajectory(const TrajectorySpec& spec) : spec_(spec) {
  switch (spec_.type) {
    case TrajectoryType::kHover:
      rate_ = 0.0;
      break;
    case TrajectoryType::kCircle:
      rate_ = spec_.speed / spec_.size_x;
      break;
    case TrajectoryType::kFigureEight:
      rate_ = spec_.speed * 2.0 * M_PI / loop_length(spec_.size_x, spec_.size_y);
      break;
  }
}

Trajectory::PathPoint Trajectory::path(double s) const {
  const Vec3& c = spec_.center;
  PathPoint pp;
  switch (spec_.type) {
    case TrajectoryType::kHover:
      pp.p = c;
      pp.dp = Vec3::UnitX();  // heading reference only
      pp.ddp.setZero();
      break;
    case TrajectoryType::kCircle: {
      const double r = spec_.size_x;
      pp.p = c + Vec3(r * std::cos(s), r * std::sin(s), 0.0);
      pp.dp = Vec3(-r * std::sin(s), r * std::cos(s), 0.0);
      pp.ddp = Vec3(-r * std::cos(s), -r * std::sin(s), 0.0);
      break;
    }
    case TrajectoryType::kFigureEight: {
      const double a = spec_.size_x, b = 0.5 * spec_.size_y, z = spec_.z_amplitude;
      pp.p = c + Vec3(a * std::sin(s), b * std::sin(2.0 * s), z * std::sin(s));
      pp.dp = Vec3(a * std::cos(s), 2.0 * b * std::cos(2.0 * s), z * std::cos(s));
      pp.ddp = Vec3(-a * std::sin(s), -4.0 * b * std::sin(2.0 * s), -z * std::sin(s));
      break;
    }
  }
  return pp;
}

void Trajectory::time_warp(double t, double& s, double& ds, double& dds) const {
  const double u = t - spec_.hover_duration;
  const double tr = spec_.ramp_duration;
  if (u <= 0.0) {
    s = ds = dds = 0.0;
  } else if (u < tr) {
    const double x = u / tr;
    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
    s = rate_ * tr * (x4 * x2 - 3.0 * x4 * x + 2.5 * x4);
    ds = rate_ * (6.0 * x4 * x - 15.0 * x4 + 10.0 * x3);
    dds = rate_ / tr * (30.0 * x4 - 60.0 * x3 + 30.0 * x2);
  } else {
    s = rate_ * (0.5 * tr + (u - tr));
    ds = rate_;
    dds = 0.0;
  }
}

Vec3 Trajectory::position(double t, Vec3* vel, Vec3* acc) const {
  double s, ds, dds;
  time_warp(t, s, ds, dds);
  const PathPoint pp = path(s);
  if (vel) *vel = pp.dp * ds;
  if (acc) *acc = pp.ddp * ds * ds + pp.dp * dds;
  return pp.p;
}

Rotation Trajectory::attitude(double t) const {
  double s, ds, dds;
  time_warp(t, s, ds, dds);
  const PathPoint pp = path(s);
  const Vec3 acc = pp.ddp * ds * ds + pp.dp * dds;

  const double yaw = std::hypot(pp.dp.x(), pp.dp.y()) > 1e-9 ? std::atan2(pp.dp.y(), pp.dp.x()) : 0.0;
  // Multirotor-style attitude: body z along the thrust direction.
  const Vec3 z_b = (acc + Vec3(0.0, 0.0, kGravity)).normalized();
  const Vec3 x_c(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 y_b = z_b.cross(x_c).normalized();
  const Vec3 x_b = y_b.cross(z_b);
  Mat3 r;
  r.col(0) = x_b;
  r.col(1) = y_b;
  r.col(2) = z_b;
  return Rotation::from_matrix(r);
}

TrajectorySample Trajectory::at(double t) const {
  TrajectorySample out;
  out.t = t;
  out.pose.translation = position(t, &out.velocity, &out.acceleration);
  out.pose.rotation = attitude(t);
  constexpr double h = 1e-5;
  const double t0 = std::max(0.0, t - h);
  const double t1 = t0 + 2.0 * h;
  out.angular_velocity = log_so3(attitude(t0).inverse() * attitude(t1)) / (t1 - t0);
  return out;
}

double Trajectory::path_length() const {
  constexpr double dt = 0.01;
  double len = 0.0;
  Vec3 prev = position(0.0, nullptr, nullptr);
  for (double t = dt; t <= spec_.duration + 1e-12; t += dt) {
    const Vec3 p = position(t, nullptr, nullptr);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

Trajectory generate_trajectory(const TrajectorySpec& spec) {
  if (!(spec.duration > 0.0) || spec.hover_duration < 0.0 || spec.ramp_duration < 0.0 || spec.speed < 0.0) {
    throw Error("invalid trajectory timing");
  }
  if (spec.type != TrajectoryType::kHover && !(spec.size_x > 0.0)) {
    throw Error("trajectory size must be positive");
  }
  Trajectory traj(spec);
  for (double t = 0.0; t <= spec.duration; t += 0.01) {
    Vec3 v, a;
    traj.position(t, &v, &a);
    if (v.norm() > spec.max_speed) throw Error("trajectory exceeds the speed bound at t=" + std::to_string(t));
    if (a.norm() > spec.max_acceleration) {
      throw Error("trajectory exceeds the acceleration bound at t=" + std::to_string(t));
    }
  }
  return traj;
}

std::vector<Vec3> generate_world(const WorldSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x0 = spec.center.x() - 0.5 * spec.size_x;
  const double y0 = spec.center.y() - 0.5 * spec.size_y;
  auto count_for = [&](double area) { return static_cast<std::size_t>(std::llround(area * spec.density)); };

  struct Building {
    double x, y, w, l, h;
    bool contains(double px, double py) const { return px >= x && px <= x + w && py >= y && py <= y + l; }
  };
  std::vector<Building> buildings;
  if (spec.type == WorldType::kStructured) {
    for (int i = 0; i < spec.buildings; ++i) {
      Building b;
      b.w = spec.building_min_size + unit(rng) * (spec.building_max_size - spec.building_min_size);
      b.l = spec.building_min_size + unit(rng) * (spec.building_max_size - spec.building_min_size);
      b.h = spec.building_min_height + unit(rng) * (spec.building_max_height - spec.building_min_height);
      b.x = x0 + unit(rng) * (spec.size_x - b.w);
      b.y = y0 + unit(rng) * (spec.size_y - b.l);
      buildings.push_back(b);
    }
  }

  std::vector<Vec3> points;
  const std::size_t ground = count_for(spec.size_x * spec.size_y);
  points.reserve(ground);
  for (std::size_t i = 0; i < ground; ++i) {
    const double px = x0 + unit(rng) * spec.size_x;
    const double py = y0 + unit(rng) * spec.size_y;
    const bool covered =
        std::any_of(buildings.begin(), buildings.end(), [&](const Building& b) { return b.contains(px, py); });
    if (!covered) points.emplace_back(px, py, 0.0);
  }

  for (const Building& b : buildings) {
    const std::size_t roof = count_for(b.w * b.l);
    for (std::size_t i = 0; i < roof; ++i) {
      points.emplace_back(b.x + unit(rng) * b.w, b.y + unit(rng) * b.l, b.h);
    }
    // Four walls, walked counter-clockwise from (x, y).
    const std::array<Vec3, 4> corners = {Vec3(b.x, b.y, 0.0), Vec3(b.x + b.w, b.y, 0.0),
                                         Vec3(b.x + b.w, b.y + b.l, 0.0), Vec3(b.x, b.y + b.l, 0.0)};
    for (int w = 0; w < 4; ++w) {
      const Vec3& a = corners[w];
      const Vec3& c = corners[(w + 1) % 4];
      const std::size_t n = count_for((c - a).norm() * b.h);
      for (std::size_t i = 0; i < n; ++i) {
        Vec3 p = a + unit(rng) * (c - a);
        p.z() = unit(rng) * b.h;
        points.push_back(p);
      }
    }
  }
  return points;
}

ImuStream synthesize_imu(const Trajectory& traj, const Scenario& s) {
  std::mt19937_64 rng = make_rng(s.seed, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian3 = [&]() { return Vec3(normal(rng), normal(rng), normal(rng)); };

  const double dt = 1.0 / s.sensors.imu_rate;
  const auto count = static_cast<std::size_t>(std::floor(traj.duration() * s.sensors.imu_rate));
  const ImuNoiseParams& q = s.imu_noise;

  ImuStream out;
  out.samples.reserve(count);
  Vec3 bg = s.gyro_bias;
  Vec3 ba = s.accel_bias;
  TrajectorySample cur = traj.at(0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * dt;
    const TrajectorySample next = traj.at(static_cast<double>(i + 1) * dt);
    const Mat3& r = cur.pose.rotation.matrix();

    ImuSample u;
    u.timestamp = t;
    u.gyro = log_so3(cur.pose.rotation.inverse() * next.pose.rotation) / dt + bg;
    u.accel = r.transpose() * ((next.velocity - cur.velocity) / dt - q.gravity) + ba;
    if (!s.noiseless) {
      u.gyro += gaussian3() * (q.gyro_noise / std::sqrt(dt));
      u.accel += gaussian3() * (q.accel_noise / std::sqrt(dt));
    }
    out.samples.push_back(u);
    out.gyro_bias.push_back(bg);
    out.accel_bias.push_back(ba);
    if (!s.noiseless) {
      bg += gaussian3() * (q.gyro_bias_walk * std::sqrt(dt));
      ba += gaussian3() * (q.accel_bias_walk * std::sqrt(dt));
    }
    cur = next;
  }
  return out;
}

namespace {

/// Uniform 2-D bucket grid over world points for footprint queries.
class WorldGrid {
 public:
  WorldGrid(const std::vector<Vec3>& points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i].x(), points[i].y())].push_back(i);
  }

  template <typename F>
  void for_each_near(const Vec3& c, double radius, F&& f) const {
    const auto [cx, cy] = coords(c.x(), c.y());
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
    for (std::int64_t ix = cx - reach; ix <= cx + reach; ++ix) {
      for (std::int64_t iy = cy - reach; iy <= cy + reach; ++iy) {
        auto it = cells_.find(pack(ix, iy));
        if (it == cells_.end()) continue;
        for (const std::size_t i : it->second) f(i, points_[i]);
      }
    }
  }

 private:
  std::pair<std::int64_t, std::int64_t> coords(double x, double y) const {
    return {static_cast<std::int64_t>(std::floor(x / cell_)), static_cast<std::int64_t>(std::floor(y / cell_))};
  }
  static std::uint64_t pack(std::int64_t ix, std::int64_t iy) {
    return (static_cast<std::uint64_t>(ix) << 32) ^ (static_cast<std::uint64_t>(iy) & 0xffffffffULL);
  }
  std::uint64_t key(double x, double y) const {
    const auto [ix, iy] = coords(x, y);
    return pack(ix, iy);
  }

  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Horizontal radius around the radar that contains every world point the
/// FOV can see, given the lowest world height. Falls back to the maximum range
/// when part of the FOV looks at or above the horizon.
double footprint_radius(const Pose& radar_pose, const SensorSpec& sensor, double z_min) {
  const double h = radar_pose.translation.z() - z_min;
  if (h <= 0.0) return sensor.max_range;
  constexpr int kSteps = 32;
  double reach = 0.0;
  for (int edge = 0; edge < 4; ++edge) {
    for (int i = 0; i <= kSteps; ++i) {
      const double u = -1.0 + 2.0 * i / kSteps;
      const double az = (edge < 2 ? (edge == 0 ? -1.0 : 1.0) : u) * sensor.fov_azimuth;
      const double el = (edge < 2 ? u : (edge == 2 ? -1.0 : 1.0)) * sensor.fov_elevation;
      const Vec3 d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const Vec3 w = radar_pose.rotation * d;
      if (w.z() > -1e-6) return sensor.max_range;
      const double horizontal = std::hypot(w.x(), w.y());
      reach = std::max(reach, std::min(h / -w.z(), sensor.max_range) * horizontal);
    }
  }
  return reach + 1.0;
}

}  // namespace

std::vector<LabeledScan> synthesize_radar(const Trajectory& traj, const std::vector<Vec3>& world, const Scenario& s) {
  std::mt19937_64 rng = make_rng(s.seed, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const SensorSpec& sensor = s.sensors;
  const RadarNoiseParams& n = s.radar_noise;
  const WorldGrid grid(world, 10.0);
  double z_min = 0.0;
  for (const Vec3& p : world) z_min = std::min(z_min, p.z());
  const double min_range2 = sensor.min_range * sensor.min_range;
  const double max_range2 = sensor.max_range * sensor.max_range;
  const double sin_el = std::sin(sensor.fov_elevation);
  const double scan_dt = 1.0 / sensor.radar_rate;
  const double last = traj.duration() - 1.0 / sensor.imu_rate;

  std::vector<LabeledScan> scans;
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * scan_dt;
    if (t > last) break;
    const TrajectorySample truth = traj.at(t);
    const Pose radar_pose = truth.pose * sensor.extrinsics;
    const Pose world_to_radar = radar_pose.inverse();
    const Mat3& r_ext = sensor.extrinsics.rotation.matrix();
    const Vec3 radar_vel = r_ext.transpose() * (truth.pose.rotation.matrix().transpose() * truth.velocity +
                                                truth.angular_velocity.cross(sensor.extrinsics.translation));

    candidates.clear();
    grid.for_each_near(radar_pose.translation, footprint_radius(radar_pose, sensor, z_min), [&](std::size_t i, const Vec3& pw) {
      const Vec3 pr = world_to_radar * pw;
      const double range2 = pr.squaredNorm();
      if (range2 < min_range2 || range2 > max_range2) return;
      if (std::abs(pr.z()) > sin_el * std::sqrt(range2)) return;
      if (std::abs(std::atan2(pr.y(), pr.x())) <= sensor.fov_azimuth) candidates.push_back(i);
    });

    const int total = sensor.min_points + static_cast<int>(unit(rng) * (sensor.max_points - sensor.min_points + 1));
    const auto wanted = static_cast<std::size_t>(std::min(total, sensor.max_points));
    const std::size_t take = std::min(wanted, candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(unit(rng) * static_cast<double>(candidates.size() - i));
      std::swap(candidates[i], candidates[std::min(j, candidates.size() - 1)]);
    }
    const auto dynamic_count = static_cast<std::size_t>(std::llround(s.dynamic_rate * static_cast<double>(take)));

    LabeledScan out;
    out.scan.timestamp = t;
    for (std::size_t i = 0; i < take; ++i) {
      const Vec3 pr = world_to_radar * world[candidates[i]];
      RadarPoint pt = RadarPoint::from_cartesian(pr, pr.normalized().dot(radar_vel));
      const bool dynamic = i < dynamic_count;
      const bool low_snr = unit(rng) < s.low_snr_rate;
      pt.snr = low_snr ? s.low_snr_mean + 2.0 * normal(rng) : s.snr_mean + s.snr_std * normal(rng);
      if (dynamic) {
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        pt.doppler += sign * s.dynamic_offset_sigmas * n.sigma_doppler;
      }
      if (!s.noiseless) {
        const double scale = low_snr ? s.low_snr_noise_scale : 1.0;
        pt.range += scale * n.sigma_range * normal(rng);
        pt.azimuth += scale * n.sigma_azimuth * normal(rng);
        pt.elevation += scale * n.sigma_elevation * normal(rng);
        pt.doppler += n.sigma_doppler * normal(rng);
      }
      out.scan.points.push_back(pt);
      out.dynamic.push_back(dynamic);
    }
    scans.push_back(std::move(out));
  }
  return scans;
}

SimulatedData simulate(const Scenario& s) {
  const Trajectory traj = generate_trajectory(s.trajectory);
  SimulatedData data;
  data.world = generate_world(s.world, s.seed);
  data.imu = synthesize_imu(traj, s);
  data.radar = synthesize_radar(traj, data.world, s);
  for (const LabeledScan& ls : data.radar) {
    data.ground_truth.push_back({ls.scan.timestamp, traj.at(ls.scan.timestamp).pose});
  }
  data.path_length = traj.path_length();
  return data;
}

}  // namespace rio::sim

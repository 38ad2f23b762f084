#include "rio/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace rio {

Mode parse_mode(std::string_view name) {
  if (name == "full") return Mode::kFull;
  if (name == "doppler-only") return Mode::kDopplerOnly;
  if (name == "p2d-only") return Mode::kP2dOnly;
  if (name == "p2p-only") return Mode::kP2pOnly;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kFull: return "full";
    case Mode::kDopplerOnly: return "doppler-only";
    case Mode::kP2dOnly: return "p2d-only";
    case Mode::kP2pOnly: return "p2p-only";
  }
  return "full";
}

namespace {

constexpr double kDeg = M_PI / 180.0;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest %g form that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

Vec3 to_vec3(const std::string& s) {
  std::istringstream in(s);
  std::string a, b, c, extra;
  if (!(in >> a >> b >> c) || (in >> extra)) throw ConfigError("expected three numbers, got '" + s + "'");
  return {to_double(a), to_double(b), to_double(c)};
}

/// key -> (setter, getter) registry bound to one object.
class KeyTable {
 public:
  using Setter = std::function<void(const std::string&)>;
  using Getter = std::function<std::string()>;

  void add(std::string key, Setter set, Getter get) { entries_.push_back({std::move(key), std::move(set), std::move(get)}); }

  void real(std::string key, double& v, double lo = -INFINITY, double hi = INFINITY) {
    add(
        std::move(key),
        [&v, lo, hi](const std::string& s) {
          const double x = to_double(s);
          if (x < lo || x > hi) throw ConfigError("value " + s + " out of range [" + fmt(lo) + ", " + fmt(hi) + "]");
          v = x;
        },
        [&v] { return fmt(v); });
  }

  void positive(std::string key, double& v) {
    add(
        std::move(key),
        [&v](const std::string& s) {
          const double x = to_double(s);
          if (!(x > 0.0)) throw ConfigError("value must be positive, got " + s);
          v = x;
        },
        [&v] { return fmt(v); });
  }

  void degrees(std::string key, double& radians, bool must_be_positive = true) {
    add(
        std::move(key),
        [&radians, must_be_positive](const std::string& s) {
          const double x = to_double(s);
          if (must_be_positive && !(x > 0.0)) throw ConfigError("value must be positive, got " + s);
          radians = x * kDeg;
        },
        [&radians] { return fmt(radians / kDeg); });
  }

  template <typename Int>
  void integer(std::string key, Int& v, long long lo, long long hi) {
    add(
        std::move(key),
        [&v, lo, hi](const std::string& s) {
          const long long x = to_integer(s);
          if (x < lo || x > hi) {
            throw ConfigError("value " + s + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
          }
          v = static_cast<Int>(x);
        },
        [&v] { return std::to_string(v); });
  }

  void boolean(std::string key, bool& v) {
    add(
        std::move(key),
        [&v](const std::string& s) {
          if (s == "true" || s == "1") {
            v = true;
          } else if (s == "false" || s == "0") {
            v = false;
          } else {
            throw ConfigError("expected true or false, got '" + s + "'");
          }
        },
        [&v] { return std::string(v ? "true" : "false"); });
  }

  void vec3(std::string key, Vec3& v) {
    add(
        std::move(key), [&v](const std::string& s) { v = to_vec3(s); },
        [&v] { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); });
  }

  void pose(const std::string& prefix, Pose& p) {
    add(
        prefix + ".rotation_rpy_deg",
        [&p](const std::string& s) {
          const Vec3 rpy = to_vec3(s) * kDeg;
          p.rotation = from_rpy(rpy.x(), rpy.y(), rpy.z());
        },
        [&p] {
          const Vec3 rpy = to_rpy(p.rotation) / kDeg;
          return fmt(rpy.x()) + " " + fmt(rpy.y()) + " " + fmt(rpy.z());
        });
    vec3(prefix + ".translation", p.translation);
  }

  void parse(std::istream& in) {
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto hash = line.find('#');
      const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      try {
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const Entry* e = find(key);
        if (!e) throw ConfigError("unknown key '" + key + "'");
        if (value.empty()) throw ConfigError("missing value for '" + key + "'");
        e->set(value);
      } catch (const ConfigError& err) {
        throw ConfigError("config line " + std::to_string(number) + ": " + err.what());
      }
    }
  }

  void write(std::ostream& out) const {
    for (const Entry& e : entries_) out << e.key << " = " << e.get() << '\n';
  }

 private:
  struct Entry {
    std::string key;
    Setter set;
    Getter get;
  };
  const Entry* find(const std::string& key) const {
    for (const Entry& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }
  std::vector<Entry> entries_;
};

void bind_imu(KeyTable& t, ImuNoiseParams& q) {
  t.positive("imu.gyro_noise", q.gyro_noise);
  t.positive("imu.accel_noise", q.accel_noise);
  t.positive("imu.gyro_bias_walk", q.gyro_bias_walk);
  t.positive("imu.accel_bias_walk", q.accel_bias_walk);
  t.add(
      "imu.gravity",
      [&q](const std::string& s) {
        const double g = to_double(s);
        if (!(g > 0.0)) throw ConfigError("gravity magnitude must be positive");
        q.gravity = Vec3(0.0, 0.0, -g);
      },
      [&q] { return fmt(q.gravity.norm()); });
}

void bind_radar(KeyTable& t, RadarNoiseParams& n) {
  t.positive("radar.sigma_range", n.sigma_range);
  t.degrees("radar.sigma_azimuth_deg", n.sigma_azimuth);
  t.degrees("radar.sigma_elevation_deg", n.sigma_elevation);
  t.positive("radar.sigma_doppler", n.sigma_doppler);
}

KeyTable pipeline_table(PipelineConfig& c) {
  KeyTable t;
  t.add(
      "mode", [&c](const std::string& s) { c.mode = parse_mode(s); },
      [&c] { return std::string(mode_name(c.mode)); });
  bind_imu(t, c.imu);
  bind_radar(t, c.radar);

  InitOptions& init = c.init;
  t.integer("init.min_samples", init.min_samples, 1, 1000000);
  t.positive("init.gravity_tolerance", init.gravity_tolerance);
  t.boolean("init.estimate_gyro_bias", init.estimate_gyro_bias);
  t.boolean("init.from_ground_truth", c.init_from_ground_truth);
  t.boolean("init.velocity_from_radar", c.init_velocity_from_radar);
  t.positive("init.std_attitude", init.stddev.attitude);
  t.positive("init.std_position", init.stddev.position);
  t.positive("init.std_velocity", init.stddev.velocity);
  t.positive("init.std_gyro_bias", init.stddev.gyro_bias);
  t.positive("init.std_accel_bias", init.stddev.accel_bias);
  t.positive("init.std_ext_rotation", init.stddev.ext_rotation);
  t.positive("init.std_ext_translation", init.stddev.ext_translation);
  t.pose("extrinsics", init.extrinsics);

  t.boolean("filter.estimate_extrinsics", c.estimate_extrinsics);
  t.boolean("filter.joseph_form", c.joseph_form);

  t.positive("doppler.sigma_multiplier", c.gate.sigma_multiplier);
  t.boolean("doppler.include_state_covariance", c.gate.include_state_covariance);

  t.positive("ransac.inlier_threshold", c.ransac.inlier_threshold);
  t.real("ransac.confidence", c.ransac.confidence, 0.0, 1.0);
  t.integer("ransac.min_iterations", c.ransac.min_iterations, 1, 1000000);
  t.integer("ransac.max_iterations", c.ransac.max_iterations, 1, 1000000);
  t.integer("ransac.seed", c.ransac.seed, 0, std::numeric_limits<long long>::max());

  t.real("snr.keep_fraction", c.snr_keep_fraction, 0.0, 1.0);
  t.integer("snr.min_points", c.snr_min_points, 0, 1000000);

  MatchOptions& m = c.match;
  t.integer("match.neighbors", m.neighborhood.neighbors, 1, 1000);
  t.positive("match.association_radius", m.neighborhood.association_radius);
  t.positive("match.inflation", m.neighborhood.inflation);
  t.positive("match.regularization", m.neighborhood.regularization);
  t.positive("match.chi2_threshold", m.chi2_threshold);
  t.real("match.max_centroid_offset", m.max_centroid_offset, 0.0);
  t.real("match.planar_ratio", m.planar_ratio, 0.0, 1.0);
  t.real("match.planar_inflation", m.planar_inflation, 1.0);
  t.boolean("match.planar_only", m.planar_only);
  t.real("match.max_normal_offset", m.max_normal_offset, 0.0);
  t.integer("match.max_iterations", m.update.max_iterations, 1, 100);
  t.positive("match.convergence", m.update.convergence);
  t.integer("match.min_matches", m.update.min_matches, 1, 1000000);
  t.boolean("match.exact_prior_jacobian", m.update.exact_prior_jacobian);

  t.positive("local_map.radius", c.local_map.radius);
  t.real("local_map.hysteresis", c.local_map.hysteresis, 0.0);
  t.boolean("local_map.dedup", c.local_map.dedup);
  t.positive("local_map.dedup_voxel", c.local_map.dedup_voxel);

  t.integer("keyframe.frames", c.keyframe.frames, 1, 100000);
  t.positive("keyframe.voxel_size", c.keyframe.voxel_size);
  t.positive("keyframe.dist_threshold", c.keyframe.dist_threshold);
  t.boolean("keyframe.trust_occupied_voxels", c.keyframe.trust_occupied_voxels);

  t.positive("pipeline.gap_warning", c.gap_warning);
  return t;
}

KeyTable scenario_table(sim::Scenario& s) {
  KeyTable t;
  t.integer("seed", s.seed, 0, std::numeric_limits<long long>::max());
  t.boolean("noiseless", s.noiseless);

  sim::TrajectorySpec& tr = s.trajectory;
  t.add(
      "trajectory.type",
      [&tr](const std::string& v) {
        if (v == "hover") {
          tr.type = sim::TrajectoryType::kHover;
        } else if (v == "circle") {
          tr.type = sim::TrajectoryType::kCircle;
        } else if (v == "figure-eight") {
          tr.type = sim::TrajectoryType::kFigureEight;
        } else {
          throw ConfigError("unknown trajectory type '" + v + "'");
        }
      },
      [&tr] {
        switch (tr.type) {
          case sim::TrajectoryType::kHover: return std::string("hover");
          case sim::TrajectoryType::kCircle: return std::string("circle");
          case sim::TrajectoryType::kFigureEight: break;
        }
        return std::string("figure-eight");
      });
  t.vec3("trajectory.center", tr.center);
  t.positive("trajectory.size_x", tr.size_x);
  t.positive("trajectory.size_y", tr.size_y);
  t.real("trajectory.z_amplitude", tr.z_amplitude);
  t.real("trajectory.speed", tr.speed, 0.0);
  t.positive("trajectory.duration", tr.duration);
  t.real("trajectory.hover_duration", tr.hover_duration, 0.0);
  t.real("trajectory.ramp_duration", tr.ramp_duration, 0.0);
  t.positive("trajectory.max_speed", tr.max_speed);
  t.positive("trajectory.max_acceleration", tr.max_acceleration);

  sim::WorldSpec& w = s.world;
  t.add(
      "world.type",
      [&w](const std::string& v) {
        if (v == "structured") {
          w.type = sim::WorldType::kStructured;
        } else if (v == "ground") {
          w.type = sim::WorldType::kGround;
        } else {
          throw ConfigError("unknown world type '" + v + "'");
        }
      },
      [&w] { return std::string(w.type == sim::WorldType::kGround ? "ground" : "structured"); });
  t.vec3("world.center", w.center);
  t.positive("world.size_x", w.size_x);
  t.positive("world.size_y", w.size_y);
  t.positive("world.density", w.density);
  t.integer("world.buildings", w.buildings, 0, 100000);
  t.positive("world.building_min_size", w.building_min_size);
  t.positive("world.building_max_size", w.building_max_size);
  t.positive("world.building_min_height", w.building_min_height);
  t.positive("world.building_max_height", w.building_max_height);

  sim::SensorSpec& se = s.sensors;
  t.positive("sensor.imu_rate", se.imu_rate);
  t.positive("sensor.radar_rate", se.radar_rate);
  t.integer("sensor.min_points", se.min_points, 0, 1000000);
  t.integer("sensor.max_points", se.max_points, 0, 1000000);
  t.degrees("sensor.fov_azimuth_deg", se.fov_azimuth);
  t.degrees("sensor.fov_elevation_deg", se.fov_elevation);
  t.positive("sensor.min_range", se.min_range);
  t.positive("sensor.max_range", se.max_range);
  t.pose("sensor.extrinsics", se.extrinsics);

  bind_radar(t, s.radar_noise);
  bind_imu(t, s.imu_noise);
  t.vec3("bias.gyro", s.gyro_bias);
  t.vec3("bias.accel", s.accel_bias);
  t.real("outliers.dynamic_rate", s.dynamic_rate, 0.0, 1.0);
  t.real("outliers.dynamic_offset_sigmas", s.dynamic_offset_sigmas);
  t.real("snr.mean", s.snr_mean);
  t.real("snr.std", s.snr_std, 0.0);
  t.real("snr.low_rate", s.low_snr_rate, 0.0, 1.0);
  t.real("snr.low_mean", s.low_snr_mean);
  t.positive("snr.low_noise_scale", s.low_snr_noise_scale);
  return t;
}

void check_scenario(const sim::Scenario& s) {
  if (s.sensors.min_points > s.sensors.max_points) throw ConfigError("sensor.min_points exceeds sensor.max_points");
  if (s.sensors.min_range >= s.sensors.max_range) throw ConfigError("sensor.min_range must be below sensor.max_range");
  if (s.world.building_min_size > s.world.building_max_size ||
      s.world.building_min_height > s.world.building_max_height) {
    throw ConfigError("building size bounds are inverted");
  }
  if (s.world.buildings > 0 && (s.world.building_max_size > s.world.size_x || s.world.building_max_size > s.world.size_y)) {
    throw ConfigError("buildings do not fit in the world");
  }
}

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

}  // namespace

void parse_config(std::istream& in, PipelineConfig& config) {
  KeyTable t = pipeline_table(config);
  t.parse(in);
  if (config.ransac.min_iterations > config.ransac.max_iterations) {
    throw ConfigError("ransac.min_iterations exceeds ransac.max_iterations");
  }
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig c;
  std::ifstream in = open_text(path);
  try {
    parse_config(in, c);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

void write_config(std::ostream& out, const PipelineConfig& config) {
  PipelineConfig copy = config;
  pipeline_table(copy).write(out);
}

void parse_scenario(std::istream& in, sim::Scenario& scenario) {
  KeyTable t = scenario_table(scenario);
  t.parse(in);
  check_scenario(scenario);
}

sim::Scenario load_scenario(const std::string& path) {
  sim::Scenario s;
  std::ifstream in = open_text(path);
  try {
    parse_scenario(in, s);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

void write_scenario(std::ostream& out, const sim::Scenario& scenario) {
  sim::Scenario copy = scenario;
  scenario_table(copy).write(out);
}

}  // namespace rio

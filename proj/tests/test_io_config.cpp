#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "rio/config.hpp"
#include "rio/io.hpp"
#include "support.hpp"

namespace rio {
namespace {

Dataset small_dataset() {
  std::mt19937_64 rng(71);
  Dataset d;
  for (int i = 0; i < 20; ++i) {
    ImuSample u;
    u.timestamp = 0.004 * i;
    u.accel = test::random_vec(rng, 2.0) + Vec3(0, 0, 9.81);
    u.gyro = test::random_vec(rng, 0.3);
    d.imu.push_back(u);
  }
  for (int k = 0; k < 2; ++k) {
    RadarScan s;
    s.timestamp = 0.03 + 0.05 * k;
    for (int i = 0; i < 4; ++i) {
      RadarPoint p = RadarPoint::from_cartesian(test::random_vec(rng, 20.0) + Vec3(30, 0, 0), 0.1 * i, 17.5);
      s.points.push_back(p);
    }
    d.radar.push_back(s);
    d.ground_truth.push_back({s.timestamp, Pose{test::random_rotation(rng), test::random_vec(rng, 9.0)}});
  }
  return d;
}

void expect_same(const Dataset& a, const Dataset& b) {
  ASSERT_EQ(a.imu.size(), b.imu.size());
  ASSERT_EQ(a.radar.size(), b.radar.size());
  ASSERT_EQ(a.ground_truth.size(), b.ground_truth.size());
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    EXPECT_NEAR(a.imu[i].timestamp, b.imu[i].timestamp, 1e-9);
    EXPECT_EQ(a.imu[i].accel, b.imu[i].accel);
    EXPECT_EQ(a.imu[i].gyro, b.imu[i].gyro);
  }
  for (std::size_t k = 0; k < a.radar.size(); ++k) {
    ASSERT_EQ(a.radar[k].points.size(), b.radar[k].points.size());
    for (std::size_t i = 0; i < a.radar[k].points.size(); ++i) {
      const RadarPoint &p = a.radar[k].points[i], &q = b.radar[k].points[i];
      EXPECT_EQ(p.range, q.range);
      EXPECT_EQ(p.azimuth, q.azimuth);
      EXPECT_EQ(p.elevation, q.elevation);
      EXPECT_EQ(p.doppler, q.doppler);
      EXPECT_EQ(p.snr, q.snr);
    }
  }
  for (std::size_t k = 0; k < a.ground_truth.size(); ++k) {
    EXPECT_EQ(a.ground_truth[k].pose.translation, b.ground_truth[k].pose.translation);
    EXPECT_LT(log_so3(a.ground_truth[k].pose.rotation.inverse() * b.ground_truth[k].pose.rotation).norm(), 1e-15);
  }
}

TEST(Dataset, TextRoundTrip) {
  const Dataset d = small_dataset();
  std::stringstream ss;
  write_dataset(ss, d);
  const Dataset back = parse_dataset(ss);
  expect_same(d, back);
}

TEST(Dataset, GzipFileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "rio_io_test";
  std::filesystem::create_directories(dir);
  const Dataset d = small_dataset();
  std::stringstream ss;
  write_dataset(ss, d);
  for (const char* name : {"d.txt", "d.txt.gz"}) {
    const std::string path = (dir / name).string();
    write_file(path, ss.str());
    EXPECT_EQ(read_file(path), ss.str());
    expect_same(d, load_dataset(path));
  }
  EXPECT_LT(std::filesystem::file_size(dir / "d.txt.gz"), std::filesystem::file_size(dir / "d.txt"));
  EXPECT_THROW(read_file((dir / "missing.txt").string()), Error);
  std::filesystem::remove_all(dir);
}

std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_dataset(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(Dataset, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("# header\nIMU 0 0 0 9.8 0 0\n"), 2u);
  EXPECT_EQ(error_line("IMU 0 0 0 9.8 0 0 0\nIMU 0.1 0 0 x 0 0 0\n"), 2u);
  EXPECT_EQ(error_line("IMU 0.1 0 0 9.8 0 0 0\nIMU 0.0 0 0 9.8 0 0 0\n"), 2u);
  EXPECT_EQ(error_line("RAD 0 2\n10 0 0 0 20\n"), 1u);
  EXPECT_EQ(error_line("RAD 0 2\n10 0 0 0 20\n-1 0 0 0 20\n"), 3u);
  EXPECT_EQ(error_line("\n\nFOO 1 2\n"), 3u);
  EXPECT_EQ(error_line("GT 0 1 2 3 0 0 0 2\n"), 1u);
  EXPECT_EQ(error_line("IMU 0 nan 0 9.8 0 0 0\n"), 1u);
  EXPECT_EQ(error_line("IMU 0 0 0 9.8 0 0 0\nRAD 0.01 0\nGT 0 0 0 0 0 0 0 1\n"), 0u);
}

TEST(Trajectory, RoundTripAndOrdering) {
  std::mt19937_64 rng(72);
  std::vector<StampedPose> poses;
  for (int i = 0; i < 5; ++i) poses.push_back({0.05 * i, Pose{test::random_rotation(rng), test::random_vec(rng, 4.0)}});
  std::stringstream ss;
  write_trajectory(ss, poses);
  const auto back = parse_trajectory(ss);
  ASSERT_EQ(back.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_NEAR(back[i].t, poses[i].t, 1e-9);
    EXPECT_LT((back[i].pose.translation - poses[i].pose.translation).norm(), 1e-8);
  }
  std::istringstream bad("0.1 0 0 0 0 0 0 1\n0.1 0 0 0 0 0 0 1\n");
  EXPECT_THROW(parse_trajectory(bad), ParseError);
}

TEST(Points, RoundTripWithComments) {
  std::vector<Vec3> pts = {Vec3(1.5, -2.25, 3.0), Vec3(0.1, 0.2, 0.3)};
  std::stringstream ss;
  ss << "# map\n";
  write_points(ss, pts);
  EXPECT_EQ(parse_points(ss), pts);
  std::istringstream bad("1 2\n");
  EXPECT_THROW(parse_points(bad), ParseError);
}

TEST(Config, RoundTripsEveryKey) {
  PipelineConfig c;
  c.mode = Mode::kP2dOnly;
  c.radar.sigma_doppler = 0.123;
  c.match.neighborhood.neighbors = 7;
  c.keyframe.frames = 4;
  c.joseph_form = true;
  std::stringstream ss;
  write_config(ss, c);
  PipelineConfig back;
  parse_config(ss, back);
  std::stringstream again;
  write_config(again, back);
  EXPECT_EQ(again.str(), ss.str());
  EXPECT_EQ(back.mode, Mode::kP2dOnly);
  EXPECT_EQ(back.match.neighborhood.neighbors, 7u);
  EXPECT_TRUE(back.joseph_form);
}

TEST(Config, AnglesAreGivenInDegrees) {
  PipelineConfig c;
  std::istringstream in("radar.sigma_azimuth_deg = 2\n");
  parse_config(in, c);
  EXPECT_NEAR(c.radar.sigma_azimuth, 2.0 * M_PI / 180.0, 1e-15);
}

std::string config_error(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  try {
    parse_config(in, c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, RejectsBadInput) {
  EXPECT_NE(config_error("# ok\n\nnope = 1\n").find("line 3"), std::string::npos);
  EXPECT_NE(config_error("radar.sigma_doppler = -1\n").find("line 1"), std::string::npos);
  EXPECT_NE(config_error("match.neighbors = 2.5\n"), "");
  EXPECT_NE(config_error("mode = fastest\n"), "");
  EXPECT_NE(config_error("filter.joseph_form = maybe\n"), "");
  EXPECT_NE(config_error("snr.keep_fraction = 1.5\n"), "");
  EXPECT_NE(config_error("radar.sigma_range\n"), "");
  EXPECT_NE(config_error("radar.sigma_range = \n"), "");
  EXPECT_EQ(config_error("mode = doppler-only\n# comment\n"), "");
}

TEST(Config, ModeNames) {
  for (Mode m : {Mode::kFull, Mode::kDopplerOnly, Mode::kP2dOnly, Mode::kP2pOnly}) {
    EXPECT_EQ(parse_mode(mode_name(m)), m);
  }
  EXPECT_THROW(parse_mode("bogus"), ConfigError);
}

TEST(Scenario, RoundTripAndValidation) {
  sim::Scenario s;
  s.seed = 9;
  s.trajectory.type = sim::TrajectoryType::kCircle;
  s.world.buildings = 12;
  s.noiseless = true;
  std::stringstream ss;
  write_scenario(ss, s);
  sim::Scenario back;
  parse_scenario(ss, back);
  std::stringstream again;
  write_scenario(again, back);
  EXPECT_EQ(again.str(), ss.str());
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.world.buildings, 12);
  EXPECT_TRUE(back.noiseless);

  sim::Scenario bad;
  std::istringstream in("sensor.min_points = 500\nsensor.max_points = 100\n");
  EXPECT_THROW(parse_scenario(in, bad), ConfigError);
}

}  // namespace
}  // namespace rio

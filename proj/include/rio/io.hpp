#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rio/ins.hpp"
#include "rio/radar.hpp"
#include "rio/sim.hpp"

namespace rio {

/// Malformed input; the message carries the source line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct StampedPose {
  double t = 0.0;
  Pose pose;
};

/// In-memory form of the line-oriented dataset log.
///   IMU t ax ay az wx wy wz
///   RAD t n            followed by n lines "r az el doppler snr"
///   GT  t px py pz qx qy qz qw
struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<RadarScan> radar;
  std::vector<StampedPose> ground_truth;
};

Dataset parse_dataset(std::istream& in);
void write_dataset(std::ostream& out, const Dataset& d);

/// Dataset view of a simulation run; records are merged by timestamp.
Dataset to_dataset(const sim::SimulatedData& data);

/// TUM-style trajectory: "t px py pz qx qy qz qw" per line.
std::vector<StampedPose> parse_trajectory(std::istream& in);
void write_trajectory(std::ostream& out, const std::vector<StampedPose>& poses);

/// Point list: "x y z" per line; '#' starts a comment.
std::vector<Vec3> parse_points(std::istream& in);
void write_points(std::ostream& out, const std::vector<Vec3>& points);

/// Whole-file helpers. Paths ending in ".gz" are read and written through
/// zlib; plain files are read unchanged.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

Dataset load_dataset(const std::string& path);
std::vector<StampedPose> load_trajectory(const std::string& path);
std::vector<Vec3> load_points(const std::string& path);

}  // namespace rio

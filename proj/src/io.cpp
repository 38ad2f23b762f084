#include "rio/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace rio {

namespace {

constexpr std::size_t kMaxPointsPerScan = 100000;

/// Whitespace tokenizer over one line with strict numeric conversion.
class Fields {
 public:
  Fields(const std::string& line, std::size_t number) : number_(number) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const std::size_t b = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > b) tokens_.emplace_back(line.substr(b, i - b));
    }
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  void expect(std::size_t n, const char* what) const {
    if (tokens_.size() != n) {
      throw ParseError(number_, std::string(what) + ": expected " + std::to_string(n) + " fields, got " +
                                    std::to_string(tokens_.size()));
    }
  }

  double real(std::size_t i) const {
    const char* s = tokens_[i].c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
      throw ParseError(number_, "invalid number '" + tokens_[i] + "'");
    }
    return v;
  }

  Vec3 vec3(std::size_t i) const { return {real(i), real(i + 1), real(i + 2)}; }

  std::size_t count(std::size_t i, std::size_t max) const {
    const std::string& t = tokens_[i];
    if (t.empty() || t.size() > 9 || t.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(number_, "invalid count '" + t + "'");
    }
    const auto v = static_cast<std::size_t>(std::stoul(t));
    if (v > max) throw ParseError(number_, "count " + t + " exceeds " + std::to_string(max));
    return v;
  }

  Pose pose(std::size_t i) const {
    const Vec3 p = vec3(i);
    const Quat q(real(i + 6), real(i + 3), real(i + 4), real(i + 5));
    if (std::abs(q.norm() - 1.0) > 1e-3) throw ParseError(number_, "quaternion is not normalized");
    return {Rotation::from_quaternion(q.normalized()), p};
  }

 private:
  std::size_t number_;
  std::vector<std::string> tokens_;
};

void check_order(double t, double& last, std::size_t line, const char* sensor) {
  if (t < last) throw ParseError(line, std::string(sensor) + " timestamp decreases");
  last = t;
}

void put_real(std::string& out, double v, const char* format) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, format, v);
  out.append(buf, static_cast<std::size_t>(n));
}

// Shortest representation that parses back to the same double.
void put_real(std::string& out, double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

void put_time(std::string& out, double t) { put_real(out, t, "%.9f"); }

void put_pose(std::string& out, const Pose& p, const char* format) {
  const Quat q = p.rotation.quaternion();
  for (double v : {p.translation.x(), p.translation.y(), p.translation.z(), q.x(), q.y(), q.z(), q.w()}) {
    out += ' ';
    put_real(out, v, format);
  }
}

bool blank_or_comment(const std::string& line) {
  const auto b = line.find_first_not_of(" \t\r");
  return b == std::string::npos || line[b] == '#';
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t number = 0;
  double last_imu = -INFINITY, last_rad = -INFINITY, last_gt = -INFINITY;
  while (std::getline(in, line)) {
    ++number;
    if (blank_or_comment(line)) continue;
    const Fields f(line, number);
    const std::string& tag = f[0];
    if (tag == "IMU") {
      f.expect(8, "IMU record");
      ImuSample u;
      u.timestamp = f.real(1);
      u.accel = f.vec3(2);
      u.gyro = f.vec3(5);
      try {
        validate(u);
      } catch (const Error& e) {
        throw ParseError(number, e.what());
      }
      check_order(u.timestamp, last_imu, number, "IMU");
      d.imu.push_back(u);
    } else if (tag == "RAD") {
      f.expect(3, "RAD record");
      RadarScan scan;
      scan.timestamp = f.real(1);
      check_order(scan.timestamp, last_rad, number, "RAD");
      const std::size_t header = number;
      const std::size_t n = f.count(2, kMaxPointsPerScan);
      scan.points.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        if (!std::getline(in, line)) throw ParseError(header, "radar scan truncated");
        ++number;
        const Fields p(line, number);
        p.expect(5, "radar point");
        RadarPoint pt;
        pt.range = p.real(0);
        pt.azimuth = p.real(1);
        pt.elevation = p.real(2);
        pt.doppler = p.real(3);
        pt.snr = p.real(4);
        if (!(pt.range > 0.0)) throw ParseError(number, "range must be positive");
        scan.points.push_back(pt);
      }
      d.radar.push_back(std::move(scan));
    } else if (tag == "GT") {
      f.expect(9, "GT record");
      StampedPose gt;
      gt.t = f.real(1);
      gt.pose = f.pose(2);
      check_order(gt.t, last_gt, number, "GT");
      d.ground_truth.push_back(gt);
    } else {
      throw ParseError(number, "unknown record type '" + tag + "'");
    }
  }
  return d;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  std::string buf;
  std::size_t i = 0, j = 0, k = 0;
  const double inf = INFINITY;
  while (i < d.imu.size() || j < d.radar.size() || k < d.ground_truth.size()) {
    const double ti = i < d.imu.size() ? d.imu[i].timestamp : inf;
    const double tj = j < d.radar.size() ? d.radar[j].timestamp : inf;
    const double tk = k < d.ground_truth.size() ? d.ground_truth[k].t : inf;
    if (ti <= tj && ti <= tk) {
      const ImuSample& u = d.imu[i++];
      buf += "IMU ";
      put_time(buf, u.timestamp);
      for (double v : {u.accel.x(), u.accel.y(), u.accel.z(), u.gyro.x(), u.gyro.y(), u.gyro.z()}) {
        buf += ' ';
        put_real(buf, v);
      }
      buf += '\n';
    } else if (tj <= tk) {
      const RadarScan& s = d.radar[j++];
      buf += "RAD ";
      put_time(buf, s.timestamp);
      buf += ' ' + std::to_string(s.points.size()) + '\n';
      for (const RadarPoint& p : s.points) {
        put_real(buf, p.range);
        for (double v : {p.azimuth, p.elevation, p.doppler, p.snr}) {
          buf += ' ';
          put_real(buf, v);
        }
        buf += '\n';
      }
    } else {
      const StampedPose& g = d.ground_truth[k++];
      buf += "GT ";
      put_time(buf, g.t);
      put_pose(buf, g.pose, "%.17g");
      buf += '\n';
    }
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

Dataset to_dataset(const sim::SimulatedData& data) {
  Dataset d;
  d.imu = data.imu.samples;
  d.radar.reserve(data.radar.size());
  for (const sim::LabeledScan& s : data.radar) d.radar.push_back(s.scan);
  for (const sim::GroundTruthPose& g : data.ground_truth) d.ground_truth.push_back({g.t, g.pose});
  return d;
}

std::vector<StampedPose> parse_trajectory(std::istream& in) {
  std::vector<StampedPose> out;
  std::string line;
  std::size_t number = 0;
  double last = -INFINITY;
  while (std::getline(in, line)) {
    ++number;
    if (blank_or_comment(line)) continue;
    const Fields f(line, number);
    f.expect(8, "trajectory record");
    StampedPose s;
    s.t = f.real(0);
    s.pose = f.pose(1);
    if (s.t <= last) throw ParseError(number, "trajectory timestamps must increase");
    last = s.t;
    out.push_back(s);
  }
  return out;
}

void write_trajectory(std::ostream& out, const std::vector<StampedPose>& poses) {
  std::string buf;
  for (const StampedPose& s : poses) {
    put_time(buf, s.t);
    put_pose(buf, s.pose, "%.9f");
    buf += '\n';
  }
  out << buf;
}

std::vector<Vec3> parse_points(std::istream& in) {
  std::vector<Vec3> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank_or_comment(line)) continue;
    const Fields f(line, number);
    f.expect(3, "point");
    out.push_back(f.vec3(0));
  }
  return out;
}

void write_points(std::ostream& out, const std::vector<Vec3>& points) {
  std::string buf;
  for (const Vec3& p : points) {
    put_real(buf, p.x());
    buf += ' ';
    put_real(buf, p.y());
    buf += ' ';
    put_real(buf, p.z());
    buf += '\n';
  }
  out << buf;
}

std::string read_file(const std::string& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error("cannot open " + path);
  std::string out;
  char chunk[1 << 16];
  int n = 0;
  while ((n = gzread(f, chunk, sizeof chunk)) > 0) out.append(chunk, static_cast<std::size_t>(n));
  int err = Z_OK;
  const char* msg = gzerror(f, &err);
  const std::string detail = msg ? msg : "";
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw Error("read error in " + path + ": " + detail);
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw Error("cannot write " + path);
    std::size_t off = 0;
    while (off < contents.size()) {
      const auto n = static_cast<unsigned>(std::min<std::size_t>(contents.size() - off, 1u << 20));
      if (gzwrite(f, contents.data() + off, n) != static_cast<int>(n)) {
        gzclose(f);
        throw Error("write error in " + path);
      }
      off += n;
    }
    if (gzclose(f) != Z_OK) throw Error("write error in " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << contents;
  if (!out) throw Error("write error in " + path);
}

Dataset load_dataset(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_dataset(in);
}

std::vector<StampedPose> load_trajectory(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_trajectory(in);
}

std::vector<Vec3> load_points(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_points(in);
}

}  // namespace rio

#pragma once

// TUM trajectory text format: `timestamp tx ty tz qx qy qz qw` per line.
// Pose fields use 9 significant digits. Timestamps use the shortest exact
// form, since 9 digits cannot separate keyframes at epoch-scale times.

#include <filesystem>
#include <string>
#include <vector>

#include "loopgate/io/text.hpp"
#include "loopgate/pose_graph.hpp"

namespace loopgate::io {

inline constexpr int kTumDigits = 9;

inline std::string write_tum(const Trajectory& traj) {
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : traj) {
    const Vec3& t = p.pose.translation();
    const Quat& q = p.pose.rotation();
    const double vals[8] = {p.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()};
    for (int i = 0; i < 8; ++i) {
      if (i) out += ' ';
      out += i ? format_sig(vals[i], kTumDigits) : format_exact(vals[i]);
    }
    out += '\n';
  }
  return out;
}

inline Trajectory parse_tum(const std::vector<std::string>& lines, const std::string& source = "<tum>") {
  std::vector<TrajectoryPoint> pts;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    FieldParser fp(source, n + 1);
    const auto tok = split_whitespace(line);
    if (tok.size() != 8) fp.fail("expected 8 fields, found " + std::to_string(tok.size()));
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = fp.number(tok[i], "number");
    if (!pts.empty() && !(v[0] > pts.back().timestamp)) fp.fail("timestamps must be strictly increasing");
    try {
      pts.push_back({v[0], Pose(Quat(v[7], v[4], v[5], v[6]), Vec3(v[1], v[2], v[3]))});
    } catch (const InvalidArgument& e) {
      fp.fail(e.what());
    }
  }
  return Trajectory(std::move(pts));
}

inline Trajectory read_tum(const std::filesystem::path& path) {
  return parse_tum(read_lines(path), path.string());
}

inline void save_tum(const std::filesystem::path& path, const Trajectory& traj) {
  write_file_atomic(path, write_tum(traj));
}

}  // namespace loopgate::io

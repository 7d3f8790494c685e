#pragma once

// Loop-candidate CSV: `query_id,match_id,tx,ty,tz,qx,qy,qz,qw,label`.
// Numbers are written in shortest round-trip form so reading is lossless.
// The file carries no information matrix; readers assign one.

#include <filesystem>
#include <string>
#include <vector>

#include "loopgate/io/text.hpp"
#include "loopgate/pose_graph.hpp"

namespace loopgate::io {

inline constexpr const char* kCandidateHeader = "query_id,match_id,tx,ty,tz,qx,qy,qz,qw,label";

inline std::string write_candidates(const std::vector<LoopCandidate>& cands) {
  std::string out = std::string(kCandidateHeader) + '\n';
  for (const auto& c : cands) {
    out += std::to_string(c.query_id) + ',' + std::to_string(c.match_id);
    const Vec3& t = c.measurement.translation();
    const Quat& q = c.measurement.rotation();
    for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
      out += ',';
      out += format_exact(v);
    }
    out += ',';
    if (c.label) out += *c.label ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::vector<LoopCandidate> parse_candidates(const std::vector<std::string>& lines,
                                                   const std::string& source = "<candidates>",
                                                   const Information& information = Information::Identity()) {
  std::vector<LoopCandidate> out;
  bool seen_header = false;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    FieldParser fp(source, n + 1);
    if (!seen_header) {
      if (line != kCandidateHeader) fp.fail(std::string("expected header '") + kCandidateHeader + "'");
      seen_header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 10) fp.fail("expected 10 fields, found " + std::to_string(f.size()));
    LoopCandidate c;
    c.query_id = fp.index(f[0], "query_id");
    c.match_id = fp.index(f[1], "match_id");
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = fp.number(f[2 + i], "number");
    try {
      c.measurement = Pose(Quat(v[6], v[3], v[4], v[5]), Vec3(v[0], v[1], v[2]));
    } catch (const InvalidArgument& e) {
      fp.fail(e.what());
    }
    if (f[9] == "1") {
      c.label = true;
    } else if (f[9] == "0") {
      c.label = false;
    } else if (!f[9].empty()) {
      fp.fail("label must be 0, 1 or empty");
    }
    c.information = information;
    out.push_back(c);
  }
  if (!seen_header) throw ParseError(source, 1, "missing header");
  return out;
}

inline std::vector<LoopCandidate> read_candidates(const std::filesystem::path& path,
                                                  const Information& information = Information::Identity()) {
  return parse_candidates(read_lines(path), path.string(), information);
}

inline void save_candidates(const std::filesystem::path& path, const std::vector<LoopCandidate>& cands) {
  write_file_atomic(path, write_candidates(cands));
}

}  // namespace loopgate::io

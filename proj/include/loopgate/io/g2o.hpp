#pragma once

// g2o SE(3) graph text format.
//
//   VERTEX_SE3:QUAT id x y z qx qy qz qw
//   EDGE_SE3:QUAT from to x y z qx qy qz qw i11 i12 ... i16 i22 ... i66
//   FIX id
//
// The 21 information entries are the upper triangle in row-major order and
// weight the (rho, phi) residual used by the solver. Edges k -> k+1 are read
// back as odometry, everything else as loops.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "loopgate/io/text.hpp"
#include "loopgate/pose_graph.hpp"

namespace loopgate::io {

inline constexpr int kG2oDigits = 9;

namespace detail {

inline void append_pose(std::string& out, const Pose& p) {
  const Vec3& t = p.translation();
  const Quat& q = p.rotation();
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
    out += ' ';
    out += format_sig(v, kG2oDigits);
  }
}

}  // namespace detail

inline std::string write_g2o(const PoseGraph& g) {
  std::string out;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out += "VERTEX_SE3:QUAT " + std::to_string(i);
    detail::append_pose(out, g.node(i));
    out += '\n';
  }
  for (const Edge& e : g.edges()) {
    out += "EDGE_SE3:QUAT " + std::to_string(e.from) + ' ' + std::to_string(e.to);
    detail::append_pose(out, e.measurement);
    for (int r = 0; r < 6; ++r) {
      for (int c = r; c < 6; ++c) {
        out += ' ';
        out += format_sig(e.information(r, c), kG2oDigits);
      }
    }
    out += '\n';
  }
  if (g.node_count() > 0) out += "FIX " + std::to_string(g.fixed_node()) + '\n';
  return out;
}

struct G2oReadResult {
  PoseGraph graph;
  std::vector<std::string> warnings;
};

inline G2oReadResult parse_g2o(const std::vector<std::string>& lines, const std::string& source = "<g2o>") {
  std::map<std::size_t, Pose> vertices;
  std::vector<Edge> edges;
  std::vector<std::string> warnings;
  std::size_t fixed = 0;
  bool have_fixed = false;

  auto read_pose = [](const FieldParser& fp, const std::vector<std::string_view>& tok, std::size_t at) {
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = fp.number(tok[at + i], "number");
    try {
      return Pose(Quat(v[6], v[3], v[4], v[5]), Vec3(v[0], v[1], v[2]));
    } catch (const InvalidArgument& e) {
      fp.fail(e.what());
    }
  };

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = split_whitespace(line);
    FieldParser fp(source, n + 1);
    const auto tag = tok[0];
    if (tag == "VERTEX_SE3:QUAT") {
      if (tok.size() != 9) fp.fail("VERTEX_SE3:QUAT expects 8 values");
      const std::size_t id = fp.index(tok[1], "vertex id");
      if (!vertices.emplace(id, read_pose(fp, tok, 2)).second) {
        fp.fail("duplicate vertex " + std::to_string(id));
      }
    } else if (tag == "EDGE_SE3:QUAT") {
      if (tok.size() != 31) fp.fail("EDGE_SE3:QUAT expects 30 values");
      Edge e;
      e.from = fp.index(tok[1], "edge endpoint");
      e.to = fp.index(tok[2], "edge endpoint");
      e.measurement = read_pose(fp, tok, 3);
      std::size_t k = 10;
      for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) {
          const double v = fp.number(tok[k++], "information entry");
          e.information(r, c) = v;
          e.information(c, r) = v;
        }
      }
      if (!is_valid_information(e.information)) fp.fail("information matrix is not positive-definite");
      edges.push_back(e);
    } else if (tag == "FIX") {
      if (tok.size() != 2) fp.fail("FIX expects one vertex id");
      fixed = fp.index(tok[1], "vertex id");
      have_fixed = true;
    } else {
      warnings.push_back(source + ":" + std::to_string(n + 1) + ": skipping unknown tag '" +
                         std::string(tag) + "'");
    }
  }

  std::vector<Pose> nodes;
  nodes.reserve(vertices.size());
  std::size_t expect = 0;
  for (const auto& [id, pose] : vertices) {
    if (id != expect) throw ParseError(source, 0, "vertex ids must be contiguous from 0 (missing " + std::to_string(expect) + ")");
    nodes.push_back(pose);
    ++expect;
  }
  std::vector<bool> have_odometry(nodes.size(), false);
  for (Edge& e : edges) {
    if (e.to == e.from + 1 && e.from < nodes.size() && !have_odometry[e.from]) {
      e.kind = EdgeKind::odometry;
      have_odometry[e.from] = true;
    } else {
      e.kind = EdgeKind::loop;
    }
  }
  if (!have_fixed) fixed = 0;
  try {
    return {PoseGraph(std::move(nodes), std::move(edges), fixed), std::move(warnings)};
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
}

inline G2oReadResult read_g2o(const std::filesystem::path& path) {
  return parse_g2o(read_lines(path), path.string());
}

inline void save_g2o(const std::filesystem::path& path, const PoseGraph& g) {
  write_file_atomic(path, write_g2o(g));
}

}  // namespace loopgate::io

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "loopgate/errors.hpp"
#include "loopgate/geometry.hpp"

namespace loopgate {

using NodeId = std::size_t;
using Information = Mat6;

struct TrajectoryPoint {
  double timestamp = 0.0;  // seconds
  Pose pose;
};

/// Time-ordered keyframe poses. Timestamps are strictly increasing.
class Trajectory {
 public:
  Trajectory() = default;

  explicit Trajectory(std::vector<TrajectoryPoint> points) : points_(std::move(points)) {
    for (std::size_t k = 1; k < points_.size(); ++k) {
      if (!(points_[k].timestamp > points_[k - 1].timestamp)) {
        throw InvalidArgument("trajectory timestamps must be strictly increasing (index " +
                              std::to_string(k) + ")");
      }
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const TrajectoryPoint& operator[](std::size_t k) const { return points_[k]; }
  const Pose& pose(std::size_t k) const { return points_[k].pose; }
  double timestamp(std::size_t k) const { return points_[k].timestamp; }

  const std::vector<TrajectoryPoint>& points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  void push_back(const TrajectoryPoint& p) {
    if (!points_.empty() && !(p.timestamp > points_.back().timestamp)) {
      throw InvalidArgument("keyframe timestamp must exceed all prior timestamps");
    }
    points_.push_back(p);
  }

  /// Translational shadow of the trajectory.
  std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.pose.translation());
    return out;
  }

  std::vector<double> timestamps() const {
    std::vector<double> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.timestamp);
    return out;
  }

  /// First `count` points.
  Trajectory prefix(std::size_t count) const {
    Trajectory t;
    t.points_.assign(points_.begin(), points_.begin() + static_cast<std::ptrdiff_t>(count));
    return t;
  }

 private:
  std::vector<TrajectoryPoint> points_;
};

enum class EdgeKind { odometry, loop };

/// True when `info` is symmetric within 1e-9 and positive-definite.
inline bool is_valid_information(const Information& info) {
  if (!info.allFinite()) return false;
  if ((info - info.transpose()).cwiseAbs().maxCoeff() > 1e-9) return false;
  Eigen::LLT<Information> llt(info);
  return llt.info() == Eigen::Success;
}

/// Diagonal information for independent translation / rotation noise.
inline Information diagonal_information(double translation_sigma, double rotation_sigma) {
  if (!(translation_sigma > 0.0) || !(rotation_sigma > 0.0)) {
    throw InvalidArgument("information sigmas must be positive");
  }
  Vec6 d;
  const double it = 1.0 / (translation_sigma * translation_sigma);
  const double ir = 1.0 / (rotation_sigma * rotation_sigma);
  d << it, it, it, ir, ir, ir;
  return d.asDiagonal();
}

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  Pose measurement;  // pose of `to` expressed in the frame of `from`
  Information information = Information::Identity();
  EdgeKind kind = EdgeKind::odometry;
};

/// A loop constraint proposed for verification.
///
/// `measurement` is the pose of the match keyframe expressed in the query
/// keyframe's frame, inverse(x_query) * x_match.
struct LoopCandidate {
  NodeId query_id = 0;
  NodeId match_id = 0;
  Pose measurement;
  Information information = Information::Identity();
  std::optional<bool> label;

  /// Loops point backward in time; swap and invert if they do not.
  LoopCandidate normalized() const {
    if (query_id > match_id) return *this;
    LoopCandidate c = *this;
    std::swap(c.query_id, c.match_id);
    c.measurement = measurement.inverse();
    // The swapped residual is -Ad(u) r, so the weight becomes Ad(u^-1)^T W Ad(u^-1).
    const Mat6 ad = adjoint(c.measurement);
    c.information = ad.transpose() * information * ad;
    c.information = 0.5 * (c.information + c.information.transpose());
    return c;
  }

  Edge as_edge() const { return {query_id, match_id, measurement, information, EdgeKind::loop}; }
};

class PoseGraph {
 public:
  PoseGraph() = default;

  PoseGraph(std::vector<Pose> nodes, std::vector<Edge> edges, NodeId fixed_node = 0,
            std::vector<double> timestamps = {})
      : nodes_(std::move(nodes)),
        edges_(std::move(edges)),
        fixed_(fixed_node),
        timestamps_(std::move(timestamps)) {
    if (timestamps_.empty()) {
      timestamps_.resize(nodes_.size());
      for (std::size_t k = 0; k < nodes_.size(); ++k) timestamps_[k] = static_cast<double>(k);
    }
    validate();
  }

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<Pose>& nodes() const { return nodes_; }
  const Pose& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Edge>& edges() const { return edges_; }
  NodeId fixed_node() const { return fixed_; }
  const std::vector<double>& timestamps() const { return timestamps_; }

  void set_node(NodeId id, const Pose& p) { nodes_.at(id) = p; }

  void add_edge(const Edge& e) {
    check_edge(e);
    edges_.push_back(e);
  }

  /// Node poses paired with the timestamp side table.
  Trajectory trajectory() const { return with_poses(nodes_); }

  Trajectory with_poses(std::span<const Pose> poses) const {
    std::vector<TrajectoryPoint> pts;
    pts.reserve(poses.size());
    for (std::size_t k = 0; k < poses.size(); ++k) pts.push_back({timestamps_[k], poses[k]});
    return Trajectory(std::move(pts));
  }

  /// Index of the odometry edge k -> k+1 for every k, or throws.
  std::vector<std::size_t> odometry_chain() const {
    const std::size_t n = nodes_.size();
    std::vector<std::size_t> chain(n > 0 ? n - 1 : 0, edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& edge = edges_[e];
      if (edge.kind == EdgeKind::odometry && edge.to == edge.from + 1 && chain[edge.from] == edges_.size()) {
        chain[edge.from] = e;
      }
    }
    for (std::size_t k = 0; k < chain.size(); ++k) {
      if (chain[k] == edges_.size()) {
        throw DisconnectedGraph("odometry chain is missing edge " + std::to_string(k) + " -> " +
                                std::to_string(k + 1));
      }
    }
    return chain;
  }

  void validate() const {
    if (timestamps_.size() != nodes_.size()) {
      throw InvalidArgument("timestamp side table does not match node count");
    }
    if (!nodes_.empty() && fixed_ >= nodes_.size()) {
      throw InvalidArgument("fixed node index out of range");
    }
    for (const auto& e : edges_) check_edge(e);
    odometry_chain();
  }

 private:
  void check_edge(const Edge& e) const {
    if (e.from >= nodes_.size() || e.to >= nodes_.size()) {
      throw InvalidArgument("edge " + std::to_string(e.from) + " -> " + std::to_string(e.to) +
                            " references a missing node");
    }
    if (e.from == e.to) {
      throw InvalidArgument("edge endpoints must differ (node " + std::to_string(e.from) + ")");
    }
    if (!is_valid_information(e.information)) {
      throw InvalidArgument("edge " + std::to_string(e.from) + " -> " + std::to_string(e.to) +
                            " has an information matrix that is not symmetric positive-definite");
    }
  }

  std::vector<Pose> nodes_;
  std::vector<Edge> edges_;
  NodeId fixed_ = 0;
  std::vector<double> timestamps_;
};

/// Graph with one node per keyframe and consecutive odometry edges; node 0 fixed.
inline PoseGraph from_odometry(const Trajectory& traj,
                               const Information& information = Information::Identity()) {
  if (traj.size() < 2) {
    throw InvalidArgument("from_odometry needs at least 2 trajectory points");
  }
  std::vector<Pose> nodes;
  std::vector<Edge> edges;
  nodes.reserve(traj.size());
  edges.reserve(traj.size() - 1);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    nodes.push_back(traj.pose(k));
    if (k + 1 < traj.size()) {
      edges.push_back({k, k + 1, traj.pose(k).inverse() * traj.pose(k + 1), information,
                       EdgeKind::odometry});
    }
  }
  return PoseGraph(std::move(nodes), std::move(edges), 0, traj.timestamps());
}

/// Chain odometry measurements outward from the fixed node.
inline Trajectory dead_reckon(const PoseGraph& graph) {
  const auto chain = graph.odometry_chain();
  const std::size_t n = graph.node_count();
  std::vector<Pose> poses(n);
  const NodeId f = graph.fixed_node();
  poses[f] = graph.node(f);
  for (std::size_t k = f; k + 1 < n; ++k) {
    poses[k + 1] = poses[k] * graph.edges()[chain[k]].measurement;
  }
  for (std::size_t k = f; k > 0; --k) {
    poses[k - 1] = poses[k] * graph.edges()[chain[k - 1]].measurement.inverse();
  }
  return graph.with_poses(poses);
}

}  // namespace loopgate

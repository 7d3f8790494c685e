#pragma once

// Loop verification by trajectory change.
//
// A candidate loop is added to pose-graph optimization. If the solve
// converges, the translational parts of the trajectory before and after are
// aligned with a similarity transform; the residual RMSE is the score, and
// the loop is accepted when the score does not exceed the threshold tau.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "loopgate/align.hpp"
#include "loopgate/errors.hpp"
#include "loopgate/pose_graph.hpp"
#include "loopgate/solver.hpp"

namespace loopgate {

struct VerifierConfig {
  double threshold_tau = 0.0;  // meters; no default, must be set
  SolverConfig solver;
  /// Weight of the odometry edges built from the input trajectory.
  Information odometry_information = Information::Identity();
  /// Non-converged solves are always rejected.
  static constexpr bool reject_on_nonconvergence = true;

  void validate() const {
    if (!(threshold_tau > 0.0)) throw InvalidArgument("threshold tau must be positive");
    solver.validate();
    if (!is_valid_information(odometry_information)) {
      throw InvalidArgument("odometry information is not symmetric positive-definite");
    }
  }
};

struct VerdictRecord {
  LoopCandidate candidate;
  std::optional<double> score;  // absent when the solve failed
  bool converged = false;
  bool accepted = false;
  SolveReport solve_report;
  std::string diagnostic;
};

/// Score a candidate against an explicit graph whose current node poses are
/// the prior trajectory. Returns the verdict and the optimized poses.
inline std::pair<VerdictRecord, Trajectory> verify_on_graph(const PoseGraph& graph,
                                                            const LoopCandidate& candidate,
                                                            const VerifierConfig& config) {
  config.validate();
  const std::size_t n = graph.node_count();
  if (candidate.query_id >= n || candidate.match_id >= n) {
    throw InvalidArgument("candidate " + std::to_string(candidate.query_id) + " -> " +
                          std::to_string(candidate.match_id) + " references a keyframe outside the trajectory (size " +
                          std::to_string(n) + ")");
  }
  if (candidate.query_id == candidate.match_id) {
    throw InvalidArgument("candidate joins keyframe " + std::to_string(candidate.query_id) + " to itself");
  }

  VerdictRecord v;
  v.candidate = candidate;
  auto [optimized, report] = optimize(graph, candidate, config.solver);
  v.solve_report = report;
  v.converged = report.converged;
  if (!v.converged) {
    v.diagnostic = std::string("solver did not converge (") + to_string(report.termination_reason) + ")";
    return {std::move(v), std::move(optimized)};
  }
  const auto before = graph.trajectory().positions();
  const auto after = optimized.positions();
  try {
    const AlignmentResult a = align(PointCloudPair{before, after});
    v.score = a.rmse;
    v.accepted = a.rmse <= config.threshold_tau;
    if (a.rank_deficient()) v.diagnostic = "trajectory is collinear or coplanar";
  } catch (const DegenerateAlignment& e) {
    v.diagnostic = std::string("alignment degenerate: ") + e.what();
    v.accepted = false;
  }
  return {std::move(v), std::move(optimized)};
}

/// Verify one candidate against a trajectory; the trajectory is the prior.
inline VerdictRecord verify(const Trajectory& traj, const LoopCandidate& candidate, const VerifierConfig& config) {
  config.validate();
  if (traj.size() < kMinAlignmentPoints) {
    VerdictRecord v;
    v.candidate = candidate;
    v.diagnostic = "trajectory has fewer than 3 keyframes";
    if (candidate.query_id >= traj.size() || candidate.match_id >= traj.size()) {
      throw InvalidArgument("candidate references a keyframe outside the trajectory");
    }
    return v;
  }
  return verify_on_graph(from_odometry(traj, config.odometry_information), candidate, config).first;
}

/// Verify every candidate against the same frozen trajectory.
inline std::vector<VerdictRecord> verify_batch(const Trajectory& traj, const std::vector<LoopCandidate>& candidates,
                                               const VerifierConfig& config, unsigned threads = 1) {
  std::vector<VerdictRecord> out(candidates.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(candidates.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = verify(traj, candidates[i], config);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < candidates.size(); i += threads) out[i] = verify(traj, candidates[i], config);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// -- sequential session -------------------------------------------------------

/// Which trajectory serves as the prior for session verification.
enum class SessionPrior {
  corrected,     // raw odometry edges plus accepted loops, at the corrected trajectory
  raw_odometry,  // every candidate sees only the raw odometry chain
};

struct SessionConfig {
  VerifierConfig verifier;
  SessionPrior prior = SessionPrior::corrected;
};

struct SessionState {
  Trajectory odometry;  // keyframes as delivered by the front-end
  Trajectory working;   // current best trajectory (loop-corrected)
  std::vector<LoopCandidate> accepted_loops;
};

namespace detail {

inline PoseGraph session_graph(const SessionState& s, const SessionConfig& cfg) {
  const std::size_t n = s.odometry.size();
  std::vector<Pose> nodes;
  std::vector<Edge> edges;
  nodes.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    nodes.push_back(cfg.prior == SessionPrior::corrected ? s.working.pose(k) : s.odometry.pose(k));
    if (k + 1 < n) {
      edges.push_back({k, k + 1, s.odometry.pose(k).inverse() * s.odometry.pose(k + 1),
                       cfg.verifier.odometry_information, EdgeKind::odometry});
    }
  }
  if (cfg.prior == SessionPrior::corrected) {
    for (const auto& loop : s.accepted_loops) edges.push_back(loop.normalized().as_edge());
  }
  return PoseGraph(std::move(nodes), std::move(edges), 0, s.odometry.timestamps());
}

}  // namespace detail

/// Append one keyframe and verify its candidates in arrival order.
inline std::pair<SessionState, std::vector<VerdictRecord>> session_step(SessionState state,
                                                                        const TrajectoryPoint& keyframe,
                                                                        const std::vector<LoopCandidate>& candidates,
                                                                        const SessionConfig& config) {
  config.verifier.validate();
  if (!state.odometry.empty() && !(keyframe.timestamp > state.odometry.points().back().timestamp)) {
    throw InvalidArgument("keyframe at t=" + std::to_string(keyframe.timestamp) + " arrived out of order");
  }
  const std::size_t new_id = state.odometry.size();
  for (const auto& c : candidates) {
    const LoopCandidate n = c.normalized();
    if (n.query_id > new_id || n.match_id > new_id) {
      throw InvalidArgument("candidate " + std::to_string(c.query_id) + " -> " + std::to_string(c.match_id) +
                            " references a keyframe that does not exist yet");
    }
  }

  // The new keyframe is placed relative to the corrected predecessor.
  Pose placed = keyframe.pose;
  if (new_id > 0 && config.prior == SessionPrior::corrected) {
    const Pose increment = state.odometry.points().back().pose.inverse() * keyframe.pose;
    placed = state.working.points().back().pose * increment;
  }
  state.odometry.push_back(keyframe);
  state.working.push_back({keyframe.timestamp, placed});

  std::vector<VerdictRecord> verdicts;
  verdicts.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (state.odometry.size() < kMinAlignmentPoints) {
      VerdictRecord v;
      v.candidate = c;
      v.diagnostic = "trajectory has fewer than 3 keyframes";
      verdicts.push_back(std::move(v));
      continue;
    }
    const PoseGraph g = detail::session_graph(state, config);
    auto [verdict, optimized] = verify_on_graph(g, c, config.verifier);
    if (verdict.accepted) {
      state.accepted_loops.push_back(c);
      if (config.prior == SessionPrior::corrected) state.working = std::move(optimized);
    }
    verdicts.push_back(std::move(verdict));
  }
  return {std::move(state), std::move(verdicts)};
}

/// Replays a whole trajectory through the session, attaching each candidate
/// to the keyframe named by its (normalized) query id, in input order.
inline std::vector<VerdictRecord> verify_sequential(const Trajectory& traj, const std::vector<LoopCandidate>& candidates,
                                                    const SessionConfig& config) {
  std::vector<std::vector<LoopCandidate>> by_frame(traj.size());
  for (const auto& c : candidates) {
    const LoopCandidate n = c.normalized();
    if (n.query_id >= traj.size()) {
      throw InvalidArgument("candidate " + std::to_string(c.query_id) + " -> " + std::to_string(c.match_id) +
                            " references a keyframe outside the trajectory");
    }
    by_frame[n.query_id].push_back(c);
  }
  SessionState state;
  std::vector<VerdictRecord> out;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    auto [next, verdicts] = session_step(std::move(state), traj[k], by_frame[k], config);
    state = std::move(next);
    for (auto& v : verdicts) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace loopgate

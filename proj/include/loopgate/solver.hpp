#pragma once

// Levenberg-Marquardt pose-graph optimization over SE(3).
//
// Each edge contributes r^T W r with r = log(inverse(x_from * u) * x_to).
// The fixed node is excluded from the state; every other node is updated as
// x <- x * exp(delta).

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "loopgate/errors.hpp"
#include "loopgate/geometry.hpp"
#include "loopgate/pose_graph.hpp"

namespace loopgate {

struct SolverConfig {
  int max_iterations = 100;
  double relative_decrease_tol = 1e-6;
  double gradient_tol = 1e-8;
  double initial_damping = 1e-4;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double max_damping = 1e12;

  void validate() const {
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
    if (!(relative_decrease_tol > 0.0) || !(gradient_tol > 0.0) || !(initial_damping > 0.0) ||
        !(damping_up > 0.0) || !(damping_down > 0.0) || !(max_damping > 0.0)) {
      throw InvalidArgument("solver tolerances and damping factors must be positive");
    }
  }
};

enum class Termination { cost_tol, gradient_tol, max_iter, numerical_failure };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::cost_tol: return "cost_tol";
    case Termination::gradient_tol: return "gradient_tol";
    case Termination::max_iter: return "max_iter";
    case Termination::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  Termination termination_reason = Termination::numerical_failure;
  /// Cost after each accepted step, starting with the initial cost.
  std::vector<double> accepted_costs;
};

struct OptimizeResult {
  Trajectory trajectory;
  SolveReport report;
};

inline Tangent6 residual(const Edge& edge, const Pose& x_from, const Pose& x_to) {
  return log((x_from * edge.measurement).inverse() * x_to);
}

struct EdgeJacobians {
  Mat6 d_from;
  Mat6 d_to;
};

/// Analytic Jacobians of `residual` w.r.t. right perturbations of both poses.
inline EdgeJacobians residual_jacobians(const Edge& edge, const Pose& x_from, const Pose& x_to) {
  const Tangent6 r = residual(edge, x_from, x_to);
  const Mat6 jr_inv = se3_right_jacobian_inverse(r);
  return {-jr_inv * adjoint(x_to.inverse() * x_from), jr_inv};
}

inline double edge_cost(const Edge& e, const Pose& x_from, const Pose& x_to) {
  const Vec6 r = residual(e, x_from, x_to).vector();
  return r.dot(e.information * r);
}

/// Sum of r^T W r over `edges` at `poses`.
inline double cost(const std::vector<Edge>& edges, const std::vector<Pose>& poses) {
  double c = 0.0;
  for (const Edge& e : edges) c += edge_cost(e, poses[e.from], poses[e.to]);
  return c;
}

inline double cost(const PoseGraph& graph) { return cost(graph.edges(), graph.nodes()); }

namespace detail {

class LevenbergMarquardt {
 public:
  LevenbergMarquardt(const PoseGraph& graph, std::vector<Edge> edges, const SolverConfig& config)
      : edges_(std::move(edges)), config_(config), poses_(graph.nodes()) {
    const std::size_t n = poses_.size();
    slot_.assign(n, -1);
    int next = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != graph.fixed_node()) slot_[k] = next++;
    }
    dim_ = 6 * next;
  }

  SolveReport run() {
    SolveReport rep;
    double current = safe_cost(poses_);
    rep.initial_cost = current;
    rep.final_cost = current;
    if (!std::isfinite(current)) {
      rep.termination_reason = Termination::numerical_failure;
      return rep;
    }
    rep.accepted_costs.push_back(current);
    if (dim_ == 0) {
      rep.converged = true;
      rep.termination_reason = Termination::gradient_tol;
      return rep;
    }

    if (!linearize()) {
      rep.termination_reason = Termination::numerical_failure;
      return rep;
    }
    bool pattern_ready = false;
    double lambda = config_.initial_damping;

    for (;;) {
      if (gradient_.cwiseAbs().maxCoeff() < config_.gradient_tol) {
        rep.converged = true;
        rep.termination_reason = Termination::gradient_tol;
        break;
      }
      if (rep.iterations >= config_.max_iterations) {
        rep.termination_reason = Termination::max_iter;
        break;
      }
      ++rep.iterations;

      Eigen::SparseMatrix<double> damped = hessian_;
      for (int i = 0; i < dim_; ++i) {
        damped.coeffRef(i, i) += lambda * std::max(hessian_diag_(i), 1e-12);
      }
      if (!pattern_ready) {
        ldlt_.analyzePattern(damped);
        pattern_ready = true;
      }
      ldlt_.factorize(damped);
      Eigen::VectorXd step;
      bool solved = ldlt_.info() == Eigen::Success;
      if (solved) {
        step = ldlt_.solve(-gradient_);
        solved = ldlt_.info() == Eigen::Success && step.allFinite();
      }
      if (!solved) {
        lambda *= config_.damping_up;
        if (lambda > config_.max_damping) {
          rep.termination_reason = Termination::numerical_failure;
          break;
        }
        continue;
      }

      std::vector<Pose> trial = retract(step);
      const double trial_cost = safe_cost(trial);
      if (std::isfinite(trial_cost) && trial_cost < current) {
        const double rel = (current - trial_cost) / current;
        poses_ = std::move(trial);
        current = trial_cost;
        rep.accepted_costs.push_back(current);
        lambda = std::max(lambda * config_.damping_down, 1e-15);
        if (rel < config_.relative_decrease_tol) {
          rep.converged = true;
          rep.termination_reason = Termination::cost_tol;
          break;
        }
        if (!linearize()) {
          rep.termination_reason = Termination::numerical_failure;
          break;
        }
      } else {
        lambda *= config_.damping_up;
        if (lambda > config_.max_damping) {
          // No step decreases the cost any more: stationary to working precision.
          rep.converged = true;
          rep.termination_reason = Termination::cost_tol;
          break;
        }
      }
    }
    rep.final_cost = current;
    return rep;
  }

  const std::vector<Pose>& poses() const { return poses_; }

 private:
  double safe_cost(const std::vector<Pose>& poses) const {
    try {
      return cost(edges_, poses);
    } catch (const BranchAmbiguity&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  bool linearize() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(edges_.size() * 4 * 36);
    gradient_ = Eigen::VectorXd::Zero(dim_);
    try {
      for (const Edge& e : edges_) {
        const Pose& a = poses_[e.from];
        const Pose& b = poses_[e.to];
        const Vec6 r = residual(e, a, b).vector();
        const EdgeJacobians J = residual_jacobians(e, a, b);
        const int sa = slot_[e.from];
        const int sb = slot_[e.to];
        const Mat6 WJa = e.information * J.d_from;
        const Mat6 WJb = e.information * J.d_to;
        const Vec6 Wr = e.information * r;
        if (sa >= 0) {
          gradient_.segment<6>(sa * 6) += J.d_from.transpose() * Wr;
          add_block(trip, sa, sa, J.d_from.transpose() * WJa);
        }
        if (sb >= 0) {
          gradient_.segment<6>(sb * 6) += J.d_to.transpose() * Wr;
          add_block(trip, sb, sb, J.d_to.transpose() * WJb);
        }
        if (sa >= 0 && sb >= 0) {
          const Mat6 ab = J.d_from.transpose() * WJb;
          add_block(trip, sa, sb, ab);
          add_block(trip, sb, sa, ab.transpose());
        }
      }
    } catch (const BranchAmbiguity&) {
      return false;
    }
    if (!gradient_.allFinite()) return false;
    hessian_.resize(dim_, dim_);
    hessian_.setFromTriplets(trip.begin(), trip.end());
    hessian_diag_ = hessian_.diagonal();
    return hessian_diag_.allFinite();
  }

  static void add_block(std::vector<Eigen::Triplet<double>>& trip, int r, int c, const Mat6& m) {
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) trip.emplace_back(r * 6 + i, c * 6 + j, m(i, j));
    }
  }

  std::vector<Pose> retract(const Eigen::VectorXd& step) const {
    std::vector<Pose> out = poses_;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (slot_[k] < 0) continue;
      out[k] = out[k] * exp(Tangent6(Vec6(step.segment<6>(slot_[k] * 6))));
    }
    return out;
  }

  std::vector<Edge> edges_;
  SolverConfig config_;
  std::vector<Pose> poses_;
  std::vector<int> slot_;
  int dim_ = 0;
  Eigen::SparseMatrix<double> hessian_;
  Eigen::VectorXd hessian_diag_;
  Eigen::VectorXd gradient_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace detail

/// Optimizes a copy of `graph`, optionally with one extra loop edge.
inline OptimizeResult optimize(const PoseGraph& graph, const std::optional<LoopCandidate>& loop,
                               const SolverConfig& config = {}) {
  config.validate();
  graph.odometry_chain();
  std::vector<Edge> edges = graph.edges();
  if (loop) {
    const LoopCandidate c = loop->normalized();
    if (c.query_id >= graph.node_count() || c.match_id >= graph.node_count()) {
      throw InvalidArgument("loop candidate " + std::to_string(loop->query_id) + " -> " +
                            std::to_string(loop->match_id) + " references a missing node");
    }
    if (c.query_id == c.match_id) throw InvalidArgument("loop candidate joins a node to itself");
    if (!is_valid_information(c.information)) {
      throw InvalidArgument("loop candidate information is not symmetric positive-definite");
    }
    edges.push_back(c.as_edge());
  }
  detail::LevenbergMarquardt lm(graph, std::move(edges), config);
  SolveReport rep = lm.run();
  return {graph.with_poses(lm.poses()), std::move(rep)};
}

inline OptimizeResult optimize(const PoseGraph& graph, const SolverConfig& config = {}) {
  return optimize(graph, std::nullopt, config);
}

}  // namespace loopgate

#pragma once

// Classification metrics for scored loop verdicts and trajectory error
// metrics against ground truth.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopgate/align.hpp"
#include "loopgate/errors.hpp"
#include "loopgate/pose_graph.hpp"

namespace loopgate::eval {

/// Higher confidence means "more likely a true loop". -inf is never accepted.
struct ScoredLabel {
  double confidence = 0.0;
  bool label = false;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Verification confidence: the negated score, or -inf when there is none.
inline double confidence_from_score(const std::optional<double>& score) {
  return score ? -*score : -std::numeric_limits<double>::infinity();
}

namespace detail {

inline void check_items(std::span<const ScoredLabel> items) {
  bool pos = false, neg = false;
  for (const auto& it : items) {
    if (std::isnan(it.confidence) || it.confidence == std::numeric_limits<double>::infinity()) {
      throw InvalidArgument("confidence must be finite or -inf");
    }
    (it.label ? pos : neg) = true;
  }
  if (!pos || !neg) throw InvalidArgument("metrics need at least one positive and one negative label");
}

}  // namespace detail

/// One point per distinct finite confidence, in decreasing confidence order.
/// Items tied at a confidence enter together.
inline std::vector<PrPoint> pr_curve(std::span<const ScoredLabel> items) {
  detail::check_items(items);
  std::vector<ScoredLabel> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.confidence > b.confidence; });
  const auto positives = static_cast<double>(std::count_if(sorted.begin(), sorted.end(),
                                                           [](const ScoredLabel& s) { return s.label; }));
  std::vector<PrPoint> curve;
  std::size_t tp = 0, taken = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double c = sorted[i].confidence;
    if (std::isinf(c)) break;
    for (; i < sorted.size() && sorted[i].confidence == c; ++i) {
      ++taken;
      if (sorted[i].label) ++tp;
    }
    curve.push_back({c, static_cast<double>(tp) / static_cast<double>(taken), static_cast<double>(tp) / positives});
  }
  return curve;
}

/// Step-interpolated area: sum of (R_k - R_{k-1}) * P_k.
inline double average_precision(std::span<const ScoredLabel> items) {
  const auto curve = pr_curve(items);
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

/// Largest recall reached with precision exactly 1, or 0.
inline double max_recall_at_full_precision(std::span<const ScoredLabel> items) {
  double mr = 0.0;
  for (const auto& p : pr_curve(items)) {
    if (p.precision == 1.0) mr = std::max(mr, p.recall);
  }
  return mr;
}

/// Fraction in [0,1] as a percentage with two decimals, e.g. "100.00".
inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction + 0.0);
  return buf;
}

// -- trajectory error ----------------------------------------------------------

inline void check_corresponded(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) {
    throw InvalidArgument("estimate and ground truth differ in length (" + std::to_string(est.size()) + " vs " +
                          std::to_string(gt.size()) + ")");
  }
  for (std::size_t k = 0; k < est.size(); ++k) {
    const double tol = 1e-6 * std::max(1.0, std::abs(gt.timestamp(k)));
    if (std::abs(est.timestamp(k) - gt.timestamp(k)) > tol) {
      throw InvalidArgument("estimate and ground truth timestamps disagree at index " + std::to_string(k));
    }
  }
}

/// Translational RMSE after aligning the estimate onto ground truth.
inline double ate_rmse(const Trajectory& estimate, const Trajectory& ground_truth,
                       AlignmentMode alignment = AlignmentMode::sim3) {
  check_corresponded(estimate, ground_truth);
  const auto ref = ground_truth.positions();
  const auto cand = estimate.positions();
  return align(PointCloudPair{ref, cand}, alignment).rmse;
}

struct TemporalAte {
  std::vector<double> checkpoint_times;
  std::vector<double> checkpoint_ate;  // prefix ATE at each checkpoint
  double tate = 0.0;                   // RMS of checkpoint_ate
};

/// Prefix ATE at k evenly spaced checkpoints; the last is the full trajectory.
inline TemporalAte temporal_ate(const Trajectory& estimate, const Trajectory& ground_truth, std::size_t k,
                                AlignmentMode alignment = AlignmentMode::sim3) {
  if (k < 1) throw InvalidArgument("temporal ATE needs k >= 1");
  check_corresponded(estimate, ground_truth);
  if (ground_truth.empty()) throw InvalidArgument("temporal ATE needs a non-empty trajectory");
  const double t0 = ground_truth.timestamp(0);
  const double span = ground_truth.timestamp(ground_truth.size() - 1) - t0;
  TemporalAte out;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const bool last = i + 1 == k;
    const double t = last ? ground_truth.timestamp(ground_truth.size() - 1)
                          : t0 + span * static_cast<double>(i + 1) / static_cast<double>(k);
    std::size_t count = ground_truth.size();
    if (!last) {
      const double slack = 1e-9 * std::max(1.0, std::abs(t));
      count = 0;
      while (count < ground_truth.size() && ground_truth.timestamp(count) <= t + slack) ++count;
    }
    if (count < kMinAlignmentPoints) {
      throw InvalidArgument("checkpoint t" + std::to_string(i) + " covers fewer than 3 keyframes");
    }
    const double e = last ? ate_rmse(estimate, ground_truth, alignment)
                          : ate_rmse(estimate.prefix(count), ground_truth.prefix(count), alignment);
    out.checkpoint_times.push_back(t);
    out.checkpoint_ate.push_back(e);
    sum_sq += e * e;
  }
  out.tate = std::sqrt(sum_sq / static_cast<double>(k));
  return out;
}

}  // namespace loopgate::eval

#pragma once

// Closed-form similarity alignment of index-corresponded point sequences and
// the post-alignment RMSE used as the trajectory change score.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "loopgate/errors.hpp"
#include "loopgate/geometry.hpp"

namespace loopgate {

enum class AlignmentMode { sim3, se3 };

inline constexpr std::size_t kMinAlignmentPoints = 3;

/// Reference P and candidate P*, corresponded by position.
struct PointCloudPair {
  std::span<const Vec3> reference;
  std::span<const Vec3> candidate;
};

struct AlignmentResult {
  SimTransform transform;  // maps candidate points onto the reference
  double rmse = 0.0;       // meters
  /// Rank of the cross-covariance; below 3 means collinear or coplanar input.
  int rank = 3;
  bool rank_deficient() const { return rank < 3; }
};

/// Root-mean-square of |p_i - s(p*_i)|.
inline double alignment_rmse(const PointCloudPair& pair, const SimTransform& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pair.reference.size(); ++i) {
    sum += (pair.reference[i] - s.apply(pair.candidate[i])).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(pair.reference.size()));
}

/// Least-squares similarity (or rigid transform) taking candidate onto reference.
inline AlignmentResult align(const PointCloudPair& pair, AlignmentMode mode = AlignmentMode::sim3) {
  const std::size_t n = pair.reference.size();
  if (pair.candidate.size() != n) {
    throw InvalidArgument("alignment point sequences differ in length (" + std::to_string(n) + " vs " +
                          std::to_string(pair.candidate.size()) + ")");
  }
  if (n < kMinAlignmentPoints) {
    throw DegenerateAlignment("alignment needs at least 3 points, got " + std::to_string(n));
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  Vec3 mu_ref = Vec3::Zero();
  Vec3 mu_cand = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_ref += pair.reference[i];
    mu_cand += pair.candidate[i];
  }
  mu_ref *= inv_n;
  mu_cand *= inv_n;

  Mat3 cov = Mat3::Zero();
  double var_cand = 0.0;
  double var_ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 dr = pair.reference[i] - mu_ref;
    const Vec3 dc = pair.candidate[i] - mu_cand;
    cov += dr * dc.transpose();
    var_cand += dc.squaredNorm();
    var_ref += dr.squaredNorm();
  }
  cov *= inv_n;
  var_cand *= inv_n;
  var_ref *= inv_n;

  const double spread = std::max({var_cand, var_ref, mu_cand.squaredNorm(), mu_ref.squaredNorm(), 1.0});
  if (var_cand <= 1e-24 * spread) {
    throw DegenerateAlignment("candidate points have zero spread");
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  const Vec3& d = svd.singularValues();

  Vec3 sign = Vec3::Ones();
  if (U.determinant() * V.determinant() < 0.0) sign(2) = -1.0;
  const Mat3 R = U * sign.asDiagonal() * V.transpose();

  const double scale = mode == AlignmentMode::sim3 ? d.dot(sign) / var_cand : 1.0;
  AlignmentResult out;
  const double tol = 1e-12 * std::max(d(0), 1e-300);
  out.rank = static_cast<int>((d.array() > tol).count());

  // Bitwise-identical clouds: the optimum is the identity, report it exactly.
  if (std::equal(pair.reference.begin(), pair.reference.end(), pair.candidate.begin())) {
    out.transform = SimTransform::identity();
    out.rmse = 0.0;
    return out;
  }
  if (!(scale > 0.0)) {
    throw DegenerateAlignment("alignment scale is not positive");
  }
  out.transform = SimTransform(R, mu_ref - scale * (R * mu_cand), scale);
  out.rmse = alignment_rmse(pair, out.transform);
  return out;
}

inline SimTransform umeyama(const PointCloudPair& pair, AlignmentMode mode = AlignmentMode::sim3) {
  return align(pair, mode).transform;
}

/// Post-alignment RMSE between reference and candidate (meters).
inline double change_score(const PointCloudPair& pair, AlignmentMode mode = AlignmentMode::sim3) {
  return align(pair, mode).rmse;
}

inline double change_score(const std::vector<Vec3>& reference, const std::vector<Vec3>& candidate,
                           AlignmentMode mode = AlignmentMode::sim3) {
  return change_score(PointCloudPair{reference, candidate}, mode);
}

}  // namespace loopgate

#pragma once

// SE(3) / SIM(3) values and the se(3) exponential machinery used by the
// pose-graph residuals.
//
// Tangent ordering is (rho, phi): translational part first, rotational part
// second. Poses are perturbed on the right, x <- x * exp(delta).

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "loopgate/errors.hpp"

namespace loopgate {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

/// Below this rotation angle exp/log switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-6;
/// Below this angle the se(3) Jacobian coefficients use series expansions.
inline constexpr double kJacobianSeriesAngle = 1e-2;
/// Quaternions whose norm is within this of 1 are stored untouched.
inline constexpr double kUnitTolerance = 1e-9;
/// log refuses rotation angles within this distance of pi.
inline constexpr double kBranchTolerance = 1e-9;

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

struct Tangent6 {
  Vec3 rho = Vec3::Zero();
  Vec3 phi = Vec3::Zero();

  Tangent6() = default;
  Tangent6(const Vec3& rho_in, const Vec3& phi_in) : rho(rho_in), phi(phi_in) {}
  explicit Tangent6(const Vec6& v) : rho(v.head<3>()), phi(v.tail<3>()) {}

  Vec6 vector() const {
    Vec6 v;
    v << rho, phi;
    return v;
  }

  Tangent6 operator-() const { return {-rho, -phi}; }
};

namespace detail {

inline Quat normalized_or_throw(const Quat& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw InvalidArgument("quaternion has zero or non-finite norm");
  }
  if (std::abs(n - 1.0) <= kUnitTolerance) {
    return q;
  }
  return Quat(q.coeffs() / n);
}

}  // namespace detail

/// Rigid transform [R | t]. Rotation is a unit quaternion.
class Pose {
 public:
  Pose() : q_(Quat::Identity()), t_(Vec3::Zero()) {}

  Pose(const Quat& q, const Vec3& t) : q_(detail::normalized_or_throw(q)), t_(t) {
    if (!t_.allFinite()) {
      throw InvalidArgument("pose translation is not finite");
    }
  }

  Pose(const Mat3& R, const Vec3& t) : Pose(Quat(R), t) {}

  static Pose identity() { return {}; }

  static Pose from_translation(const Vec3& t) { return {Quat::Identity(), t}; }

  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero()) {
    return {Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), t};
  }

  const Quat& rotation() const { return q_; }
  const Vec3& translation() const { return t_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_matrix();
    m.topRightCorner<3, 1>() = t_;
    return m;
  }

  Pose inverse() const {
    const Quat qi = q_.conjugate();
    return {qi, -(qi * t_)};
  }

  /// Composition a * b; the rotation is renormalized.
  Pose operator*(const Pose& b) const {
    Quat q = q_ * b.q_;
    q.normalize();
    Pose out;
    out.q_ = q;
    out.t_ = t_ + q_ * b.t_;
    return out;
  }

  Vec3 operator*(const Vec3& p) const { return q_ * p + t_; }

  /// Rotation angle in [0, pi].
  double angle() const {
    const double w = std::abs(q_.w());
    return 2.0 * std::atan2(q_.vec().norm(), w);
  }

 private:
  Quat q_;
  Vec3 t_;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& p) { return p.inverse(); }

/// Rotation angle and translation norm of a^-1 * b.
struct PoseDistance {
  double angle = 0.0;
  double translation = 0.0;
};

inline PoseDistance distance(const Pose& a, const Pose& b) {
  const Pose d = a.inverse() * b;
  return {d.angle(), d.translation().norm()};
}

// -- SO(3) ------------------------------------------------------------------

inline Quat so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  double w, k;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 1.0 - t2 / 8.0;
    k = 0.5 - t2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  Quat q(w, k * phi.x(), k * phi.y(), k * phi.z());
  q.normalize();
  return q;
}

/// Principal-branch logarithm. Throws BranchAmbiguity at angle pi.
inline Vec3 so3_log(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const double vn = q.vec().norm();
  const double theta = 2.0 * std::atan2(vn, q.w());
  if (theta > std::numbers::pi - kBranchTolerance) {
    throw BranchAmbiguity("rotation angle at pi has no unique logarithm");
  }
  if (theta < kSmallAngle) {
    // theta / sin(theta/2) ~ 2 (1 + theta^2 / 24); with w ~ 1, vn ~ theta / 2.
    const double w = q.w();
    return (2.0 / w) * (1.0 - vn * vn / (3.0 * w * w)) * q.vec();
  }
  return (theta / vn) * q.vec();
}

inline Mat3 so3_left_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 P = hat(phi);
  double a, b;
  if (theta < kJacobianSeriesAngle) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() + a * P + b * P * P;
}

/// Coefficient of hat(phi)^2 in the inverse left Jacobian (and in V^-1).
inline double so3_inverse_jacobian_coefficient(double theta) {
  if (theta < kJacobianSeriesAngle) {
    const double t2 = theta * theta;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  const double half = 0.5 * theta;
  return (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
}

inline Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
  const Mat3 P = hat(phi);
  return Mat3::Identity() - 0.5 * P + so3_inverse_jacobian_coefficient(phi.norm()) * P * P;
}

// -- SE(3) ------------------------------------------------------------------

inline Pose exp(const Tangent6& v) {
  const double theta = v.phi.norm();
  if (theta < kSmallAngle) {
    const Mat3 P = hat(v.phi);
    const double t2 = theta * theta;
    const Mat3 V = Mat3::Identity() + (0.5 - t2 / 24.0) * P + (1.0 / 6.0 - t2 / 120.0) * P * P;
    return {so3_exp(v.phi), V * v.rho};
  }
  return {so3_exp(v.phi), so3_left_jacobian(v.phi) * v.rho};
}

inline Tangent6 log(const Pose& p) {
  const Vec3 phi = so3_log(p.rotation());
  const double theta = phi.norm();
  const Mat3 P = hat(phi);
  double c;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = so3_inverse_jacobian_coefficient(theta);
  }
  const Mat3 Vinv = Mat3::Identity() - 0.5 * P + c * P * P;
  return {Vinv * p.translation(), phi};
}

/// Adjoint acting on (rho, phi) tangents: p * exp(v) * p^-1 = exp(Ad(p) v).
inline Mat6 adjoint(const Pose& p) {
  const Mat3 R = p.rotation_matrix();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = R;
  ad.topRightCorner<3, 3>() = hat(p.translation()) * R;
  ad.bottomRightCorner<3, 3>() = R;
  return ad;
}

/// Off-diagonal block of the SE(3) left Jacobian.
inline Mat3 se3_left_jacobian_q(const Vec3& rho, const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 R = hat(rho);
  const Mat3 P = hat(phi);
  double c1, c2, c3;
  if (theta < kJacobianSeriesAngle) {
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    c1 = 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double t2 = theta * theta;
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  const Mat3 PR = P * R;
  const Mat3 RP = R * P;
  const Mat3 PRP = PR * P;
  const Mat3 PP = P * P;
  return 0.5 * R + c1 * (PR + RP + PRP) + c2 * (PP * R + RP * P - 3.0 * PRP) +
         c3 * (PRP * P + P * PRP);
}

inline Mat6 se3_left_jacobian(const Tangent6& v) {
  Mat6 J = Mat6::Zero();
  const Mat3 Jl = so3_left_jacobian(v.phi);
  J.topLeftCorner<3, 3>() = Jl;
  J.bottomRightCorner<3, 3>() = Jl;
  J.topRightCorner<3, 3>() = se3_left_jacobian_q(v.rho, v.phi);
  return J;
}

inline Mat6 se3_right_jacobian(const Tangent6& v) { return se3_left_jacobian(-v); }

/// Inverse right Jacobian: log(exp(v) * exp(d)) ~ v + Jr^-1(v) d.
inline Mat6 se3_right_jacobian_inverse(const Tangent6& v) {
  const Tangent6 m = -v;
  const Mat3 Ainv = so3_left_jacobian_inverse(m.phi);
  const Mat3 Q = se3_left_jacobian_q(m.rho, m.phi);
  Mat6 J = Mat6::Zero();
  J.topLeftCorner<3, 3>() = Ainv;
  J.bottomRightCorner<3, 3>() = Ainv;
  J.topRightCorner<3, 3>() = -Ainv * Q * Ainv;
  return J;
}

// -- SIM(3) -----------------------------------------------------------------

/// Similarity p -> scale * R * p + t.
class SimTransform {
 public:
  SimTransform() = default;

  SimTransform(const Quat& q, const Vec3& t, double scale)
      : q_(detail::normalized_or_throw(q)), t_(t), scale_(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw InvalidArgument("similarity scale must be positive and finite");
    }
  }

  SimTransform(const Mat3& R, const Vec3& t, double scale) : SimTransform(Quat(R), t, scale) {}

  static SimTransform identity() { return {}; }

  const Quat& rotation() const { return q_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }
  const Vec3& translation() const { return t_; }
  double scale() const { return scale_; }

  Vec3 apply(const Vec3& p) const { return scale_ * (q_ * p) + t_; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }

  SimTransform operator*(const SimTransform& b) const {
    Quat q = q_ * b.q_;
    q.normalize();
    return {q, scale_ * (q_ * b.t_) + t_, scale_ * b.scale_};
  }

  SimTransform inverse() const {
    const Quat qi = q_.conjugate();
    const double si = 1.0 / scale_;
    return {qi, -si * (qi * t_), si};
  }

 private:
  Quat q_ = Quat::Identity();
  Vec3 t_ = Vec3::Zero();
  double scale_ = 1.0;
};

inline Vec3 apply_sim(const SimTransform& s, const Vec3& p) { return s.apply(p); }

}  // namespace loopgate

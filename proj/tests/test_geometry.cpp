#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"

using namespace loopgate;
using loopgate::testing::random_pose;
using loopgate::testing::random_vec;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_pose_near(const Pose& a, const Pose& b, double tol) {
  const auto d = distance(a, b);
  EXPECT_LT(d.angle, tol);
  EXPECT_LT(d.translation, tol);
}

}  // namespace

TEST(Geometry, ComposeIdentityAndInverse) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Pose p = random_pose(rng);
    expect_pose_near(compose(Pose::identity(), p), p, 1e-12);
    expect_pose_near(compose(p, Pose::identity()), p, 1e-12);
    expect_pose_near(compose(p, inverse(p)), Pose::identity(), 1e-9);
    expect_pose_near(compose(inverse(p), p), Pose::identity(), 1e-9);
  }
}

TEST(Geometry, ComposeHandExample) {
  const Pose a = Pose::from_yaw(kPi / 2, Vec3(1, 0, 0));
  const Pose b = Pose::from_translation(Vec3(1, 0, 0));
  const Pose c = compose(a, b);
  EXPECT_NEAR((c.translation() - Vec3(1, 1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(c.angle(), kPi / 2, 1e-12);
  // Same thing as a 4x4 matrix product.
  EXPECT_LT((c.matrix() - a.matrix() * b.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Geometry, Associativity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    expect_pose_near((a * b) * c, a * (b * c), 1e-9);
  }
}

TEST(Geometry, CompositionKeepsUnitQuaternion) {
  std::mt19937_64 rng(3);
  Pose p;
  for (int i = 0; i < 10000; ++i) p = p * random_pose(rng, 0.3, 1.0);
  EXPECT_NEAR(p.rotation().norm(), 1.0, 1e-9);
}

TEST(Geometry, ExpZeroIsIdentity) {
  const Pose p = exp(Tangent6{});
  EXPECT_EQ(p.translation(), Vec3::Zero());
  EXPECT_EQ(p.angle(), 0.0);
}

TEST(Geometry, PureTranslationRoundTrip) {
  const Tangent6 v{Vec3(1, 2, 3), Vec3::Zero()};
  const Tangent6 w = log(exp(v));
  EXPECT_LT((w.vector() - v.vector()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Geometry, ExpLogRoundTripRandom) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ang(0.0, 3.0);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec3 axis(n(rng), n(rng), n(rng));
    axis.normalize();
    const Tangent6 v{random_vec(rng, 5.0), axis * ang(rng)};
    worst = std::max(worst, (log(exp(v)).vector() - v.vector()).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Geometry, ExpLogSmallAngles) {
  for (double a : {0.0, 1e-12, 1e-9, 1e-7, 1e-6, 2e-6, 1e-4, 1e-2}) {
    const Tangent6 v{Vec3(0.3, -0.2, 0.1), Vec3(1, 2, -1).normalized() * a};
    EXPECT_LT((log(exp(v)).vector() - v.vector()).cwiseAbs().maxCoeff(), 1e-12) << a;
  }
}

TEST(Geometry, LogAtPiIsAmbiguous) {
  const Pose p(Quat(Eigen::AngleAxisd(kPi, Vec3::UnitX())), Vec3(1, 0, 0));
  EXPECT_THROW(log(p), BranchAmbiguity);
}

TEST(Geometry, ExpMatchesMatrixExponential) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Tangent6 v{random_vec(rng, 2.0), random_vec(rng, 1.5)};
    Mat4 X = Mat4::Zero();
    X.topLeftCorner<3, 3>() = hat(v.phi);
    X.topRightCorner<3, 1>() = v.rho;
    // Truncated series; |X| is small enough for 40 terms.
    Mat4 term = Mat4::Identity(), sum = Mat4::Identity();
    for (int k = 1; k < 40; ++k) {
      term = term * X / k;
      sum += term;
    }
    EXPECT_LT((exp(v).matrix() - sum).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Geometry, AdjointMovesTangents) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const Pose T = random_pose(rng);
    const Tangent6 v{random_vec(rng, 0.5), random_vec(rng, 0.5)};
    const Pose lhs = T * exp(v) * T.inverse();
    const Pose rhs = exp(Tangent6(adjoint(T) * v.vector()));
    EXPECT_LT(distance(lhs, rhs).angle, 1e-10);
    EXPECT_LT(distance(lhs, rhs).translation, 1e-10);
  }
}

TEST(Geometry, RightJacobianFirstOrder) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    const Tangent6 v{random_vec(rng, 1.0), random_vec(rng, 1.0)};
    const Mat6 Jr = se3_right_jacobian(v);
    EXPECT_LT((Jr * se3_right_jacobian_inverse(v) - Mat6::Identity()).cwiseAbs().maxCoeff(), 1e-10);
    // exp(v + d) ~ exp(v) exp(Jr d)
    const double h = 1e-6;
    for (int c = 0; c < 6; ++c) {
      Vec6 d = Vec6::Zero();
      d(c) = h;
      const Vec6 numeric = log(exp(v).inverse() * exp(Tangent6(v.vector() + d))).vector() / h;
      EXPECT_LT((numeric - Jr.col(c)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(Geometry, JacobianSeriesContinuity) {
  // Series and closed form agree across the switch angle.
  const Vec3 rho(0.4, -1.0, 2.0);
  const Vec3 axis = Vec3(1, 1, 0.5).normalized();
  const Mat3 below = se3_left_jacobian_q(rho, axis * (kJacobianSeriesAngle * (1 - 1e-9)));
  const Mat3 above = se3_left_jacobian_q(rho, axis * (kJacobianSeriesAngle * (1 + 1e-9)));
  EXPECT_LT((below - above).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Geometry, ApplySimExamples) {
  EXPECT_EQ(apply_sim(SimTransform::identity(), Vec3(1, 2, 3)), Vec3(1, 2, 3));
  EXPECT_EQ(apply_sim(SimTransform(Quat::Identity(), Vec3::Zero(), 2.0), Vec3(1, 0, 0)), Vec3(2, 0, 0));
  const SimTransform s(Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ())), Vec3(1, 1, 1), 2.0);
  EXPECT_LT((apply_sim(s, Vec3(1, 0, 0)) - Vec3(1, 3, 1)).norm(), 1e-12);
}

TEST(Geometry, SimComposeAndInverse) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> sc(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    const SimTransform a(loopgate::testing::random_rotation(rng), random_vec(rng, 5), sc(rng));
    const SimTransform b(loopgate::testing::random_rotation(rng), random_vec(rng, 5), sc(rng));
    const Vec3 p = random_vec(rng, 3);
    EXPECT_LT((apply_sim(a * b, p) - apply_sim(a, apply_sim(b, p))).norm(), 1e-9);
    EXPECT_LT((apply_sim(a.inverse(), apply_sim(a, p)) - p).norm(), 1e-9);
  }
}

TEST(Geometry, SimRejectsBadScale) {
  EXPECT_THROW(SimTransform(Quat::Identity(), Vec3::Zero(), 0.0), InvalidArgument);
  EXPECT_THROW(SimTransform(Quat::Identity(), Vec3::Zero(), -1.0), InvalidArgument);
}

TEST(Geometry, PoseRejectsDegenerateInput) {
  EXPECT_THROW(Pose(Quat(0, 0, 0, 0), Vec3::Zero()), InvalidArgument);
  EXPECT_THROW(Pose(Quat::Identity(), Vec3(NAN, 0, 0)), InvalidArgument);
}

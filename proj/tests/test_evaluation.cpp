#include <gtest/gtest.h>

#include <limits>

#include "test_util.hpp"

using namespace loopgate;
using namespace loopgate::eval;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Brute {
  double ap = 0.0, mr = 0.0;
  std::vector<PrPoint> curve;
};

// Enumerate every threshold "accept confidence >= c" over distinct finite values.
Brute brute_force(const std::vector<ScoredLabel>& items) {
  std::vector<double> thresholds;
  for (const auto& it : items) {
    if (std::isfinite(it.confidence)) thresholds.push_back(it.confidence);
  }
  std::sort(thresholds.rbegin(), thresholds.rend());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double positives = 0;
  for (const auto& it : items) positives += it.label;
  Brute b;
  double prev_r = 0.0;
  for (double c : thresholds) {
    double tp = 0, n = 0;
    for (const auto& it : items) {
      if (it.confidence >= c) {
        ++n;
        tp += it.label;
      }
    }
    const PrPoint p{c, tp / n, tp / positives};
    b.curve.push_back(p);
    b.ap += (p.recall - prev_r) * p.precision;
    prev_r = p.recall;
    if (p.precision == 1.0) b.mr = std::max(b.mr, p.recall);
  }
  return b;
}

}  // namespace

TEST(Metrics, PerfectSeparation) {
  const std::vector<ScoredLabel> items{{0.9, true}, {0.8, true}, {0.1, false}, {kNegInf, false}};
  EXPECT_EQ(format_percent(average_precision(items)), "100.00");
  EXPECT_EQ(format_percent(max_recall_at_full_precision(items)), "100.00");
  const auto c = pr_curve(items);
  EXPECT_EQ(c[1].precision, 1.0);
  EXPECT_EQ(c[1].recall, 1.0);
}

TEST(Metrics, TopFalsePositiveGivesZeroMr) {
  const std::vector<ScoredLabel> items{{0.9, false}, {0.8, true}, {0.1, true}};
  EXPECT_EQ(format_percent(max_recall_at_full_precision(items)), "0.00");
}

TEST(Metrics, SinglePositiveLast) {
  std::vector<ScoredLabel> items;
  for (int i = 0; i < 9; ++i) items.push_back({1.0 + i, false});
  items.push_back({0.0, true});
  const auto c = pr_curve(items);
  EXPECT_DOUBLE_EQ(c.back().precision, 0.1);
  EXPECT_EQ(c.back().recall, 1.0);
}

TEST(Metrics, TiesEnterTogether) {
  const std::vector<ScoredLabel> items{{0.5, true}, {0.5, false}, {0.2, true}};
  const auto c = pr_curve(items);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].precision, 0.5);
  EXPECT_EQ(c[0].recall, 0.5);
}

TEST(Metrics, NegativeInfinityNeverAccepted) {
  const std::vector<ScoredLabel> items{{0.5, true}, {kNegInf, true}, {0.1, false}};
  const auto c = pr_curve(items);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.back().recall, 0.5);
}

TEST(Metrics, OneClassRejected) {
  EXPECT_THROW(pr_curve(std::vector<ScoredLabel>{{1.0, true}, {0.5, true}}), InvalidArgument);
  EXPECT_THROW(pr_curve(std::vector<ScoredLabel>{{NAN, true}, {0.5, false}}), InvalidArgument);
}

TEST(Metrics, SixItemBruteForce) {
  const std::vector<ScoredLabel> items{{0.9, true}, {0.8, false}, {0.7, true}, {0.6, true}, {0.3, false}, {0.1, true}};
  // Hand sum: R steps 1/4 at P 1, 2/3, 3/4, 4/6
  const double expect = 0.25 * (1.0 + 2.0 / 3.0 + 3.0 / 4.0 + 4.0 / 6.0);
  EXPECT_NEAR(average_precision(items), expect, 1e-15);
  EXPECT_NEAR(average_precision(items), brute_force(items).ap, 1e-15);
  EXPECT_EQ(max_recall_at_full_precision(items), 0.25);
}

TEST(Metrics, RandomBruteForceAgreement) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> size(2, 12), level(0, 5), coin(0, 1), inf(0, 9);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<ScoredLabel> items(size(rng));
    for (auto& it : items) {
      it.confidence = inf(rng) == 0 ? kNegInf : level(rng) * 0.25;
      it.label = coin(rng);
    }
    items[0].label = true;
    items[1].label = false;
    const auto b = brute_force(items);
    const auto c = pr_curve(items);
    ASSERT_EQ(c.size(), b.curve.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(c[i].threshold, b.curve[i].threshold);
      EXPECT_DOUBLE_EQ(c[i].precision, b.curve[i].precision);
      EXPECT_DOUBLE_EQ(c[i].recall, b.curve[i].recall);
    }
    EXPECT_NEAR(average_precision(items), b.ap, 1e-12);
    EXPECT_EQ(max_recall_at_full_precision(items), b.mr);
  }
}

TEST(Metrics, MonotoneTransformInvariance) {
  std::mt19937_64 rng(52);
  std::normal_distribution<double> n;
  std::vector<ScoredLabel> items;
  for (int i = 0; i < 40; ++i) items.push_back({n(rng) + (i % 2), i % 2 == 1});
  auto moved = items;
  for (auto& it : moved) it.confidence = std::exp(3 * it.confidence) + 7;
  EXPECT_EQ(average_precision(items), average_precision(moved));
  EXPECT_EQ(max_recall_at_full_precision(items), max_recall_at_full_precision(moved));
}

TEST(Ate, IdentityAndSimilarityGiveZero) {
  const auto gt = sim::generate_ground_truth({});
  EXPECT_LT(ate_rmse(gt, gt), 1e-12);
  std::vector<TrajectoryPoint> pts;
  const SimTransform S(Quat(Eigen::AngleAxisd(0.7, Vec3::UnitZ())), Vec3(3, -1, 2), 1.7);
  for (const auto& p : gt) pts.push_back({p.timestamp, Pose(p.pose.rotation(), S.apply(p.pose.translation()))});
  EXPECT_LT(ate_rmse(Trajectory(pts), gt), 1e-9);
}

TEST(Ate, SinglePointDisplacementBound) {
  const auto gt = sim::generate_ground_truth({});
  const double d = 0.5;
  std::vector<TrajectoryPoint> pts(gt.begin(), gt.end());
  pts[77].pose = Pose(pts[77].pose.rotation(), pts[77].pose.translation() + Vec3(0, 0, d));
  for (auto mode : {AlignmentMode::sim3, AlignmentMode::se3}) {
    const double e = ate_rmse(Trajectory(pts), gt, mode);
    EXPECT_GT(e, 0.0);
    EXPECT_LE(e, d / std::sqrt(static_cast<double>(gt.size())) + 1e-12);
  }
}

TEST(Ate, MismatchedTrajectories) {
  const auto gt = sim::generate_ground_truth({});
  EXPECT_THROW(ate_rmse(gt.prefix(50), gt), InvalidArgument);
  std::vector<TrajectoryPoint> shifted(gt.begin(), gt.end());
  for (auto& p : shifted) p.timestamp += 0.5;
  EXPECT_THROW(ate_rmse(Trajectory(shifted), gt), InvalidArgument);
}

TEST(TemporalAte, Structure) {
  const auto gt = sim::generate_ground_truth({});
  const auto odo = sim::corrupt_odometry(gt, {0.1}, 3);
  const auto t = temporal_ate(odo, gt, 5);
  ASSERT_EQ(t.checkpoint_ate.size(), 5u);
  EXPECT_NEAR(t.checkpoint_ate.back(), ate_rmse(odo, gt), 1e-12);
  double ss = 0.0;
  for (double e : t.checkpoint_ate) ss += e * e;
  EXPECT_NEAR(t.tate, std::sqrt(ss / 5), 1e-15);
  EXPECT_GT(t.tate, 0.0);
  const auto z = temporal_ate(gt, gt, 5);
  for (double e : z.checkpoint_ate) EXPECT_LT(e, 1e-12);
  EXPECT_LT(z.tate, 1e-12);
  const std::string table = report::tate_table_csv(t);
  EXPECT_EQ(table.substr(0, table.find('\n')), "t0,t1,t2,t3,t4,tATE");
}

TEST(TemporalAte, TooFewPointsInFirstCheckpoint) {
  const auto gt = sim::generate_ground_truth({});
  EXPECT_THROW(temporal_ate(gt.prefix(12), gt.prefix(12), 10), InvalidArgument);
  EXPECT_THROW(temporal_ate(gt, gt, 0), InvalidArgument);
}

TEST(Report, MetricsAndSvg) {
  const std::vector<ScoredLabel> items{{0.9, true}, {0.1, false}};
  EXPECT_EQ(report::metrics_csv(report::classification_rows(items)), "metric,value\nAP,100.00\nMR,100.00\n");
  const std::string svg = report::pr_curves_svg({{"sigma=0.01", pr_curve(items)}, {"sigma=0.1", pr_curve(items)}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("sigma=0.1"), std::string::npos);
  std::size_t lines = 0;
  for (std::size_t p = 0; (p = svg.find("<polyline", p)) != std::string::npos; ++p) ++lines;
  EXPECT_EQ(lines, 2u);
}

#pragma once

// Synthetic ground truth, noisy odometry and labelled loop candidates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "loopgate/errors.hpp"
#include "loopgate/geometry.hpp"
#include "loopgate/pose_graph.hpp"

namespace loopgate::sim {

enum class Shape { grid_loop, circle, figure_eight, multi_floor_stack };

inline const char* to_string(Shape s) {
  switch (s) {
    case Shape::grid_loop: return "grid_loop";
    case Shape::circle: return "circle";
    case Shape::figure_eight: return "figure_eight";
    case Shape::multi_floor_stack: return "multi_floor_stack";
  }
  return "unknown";
}

inline Shape parse_shape(std::string_view s) {
  if (s == "grid_loop") return Shape::grid_loop;
  if (s == "circle") return Shape::circle;
  if (s == "figure_eight") return Shape::figure_eight;
  if (s == "multi_floor_stack") return Shape::multi_floor_stack;
  throw InvalidArgument("unknown shape '" + std::string(s) + "'");
}

inline constexpr Shape kAllShapes[] = {Shape::grid_loop, Shape::circle, Shape::figure_eight,
                                       Shape::multi_floor_stack};

struct ScenarioSpec {
  Shape shape = Shape::grid_loop;
  std::size_t keyframe_count = 200;
  double keyframe_spacing = 1.0;  // meters along the path
  double floor_height = 3.0;      // multi_floor_stack only
  int floors = 2;                 // multi_floor_stack only
  bool open_loop = false;         // stop before the path revisits itself
  double keyframe_period = 1.0;   // seconds between keyframes
  std::uint64_t seed = 0;         // base seed of a run; shapes are deterministic

  void validate() const {
    if (keyframe_count < 10) throw InvalidArgument("keyframe_count must be >= 10");
    if (!(keyframe_spacing > 0.0)) throw InvalidArgument("keyframe_spacing must be positive");
    if (!(keyframe_period > 0.0)) throw InvalidArgument("keyframe_period must be positive");
    if (shape == Shape::multi_floor_stack) {
      if (floors < 1) throw InvalidArgument("floors must be >= 1");
      if (!(floor_height > 0.0)) throw InvalidArgument("floor_height must be positive");
    }
  }
};

/// Odometry noise: per step, translation std = sigma * step length and
/// rotation std = rotation_ratio * sigma * step length (radians).
struct NoiseSpec {
  double sigma = 0.0;
  double rotation_ratio = 0.1;

  void validate() const {
    if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
    if (!(rotation_ratio >= 0.0)) throw InvalidArgument("rotation ratio must be >= 0");
  }
};

enum class FalseLoopModel {
  near_identity,  // the two places are reported as the same place
  aliased_copy,   // a noisy copy of some true revisit's relative pose
};

struct CandidateSpec {
  double true_loop_radius = 2.0;          // meters
  double false_loop_min_distance = 10.0;  // meters
  std::size_t true_count = 20;
  std::size_t false_count = 20;
  std::size_t min_temporal_gap = 10;  // keyframes
  NoiseSpec measurement_noise;        // sigma in meters for loop measurements
  FalseLoopModel false_model = FalseLoopModel::near_identity;

  void validate() const {
    if (!(true_loop_radius > 0.0)) throw InvalidArgument("true_loop_radius must be positive");
    if (!(false_loop_min_distance > true_loop_radius)) {
      throw InvalidArgument("false_loop_min_distance must exceed true_loop_radius");
    }
    if (min_temporal_gap < 1) throw InvalidArgument("min_temporal_gap must be >= 1");
    measurement_noise.validate();
  }
};

/// Smallest sigma used when turning a noise level into an information matrix.
inline constexpr double kInformationSigmaFloor = 1e-3;

/// Information matching a noise level at the given step length.
inline Information information_for(const NoiseSpec& noise, double step_length = 1.0) {
  const double t = std::max(noise.sigma * step_length, kInformationSigmaFloor);
  const double ratio = noise.rotation_ratio > 0.0 ? noise.rotation_ratio : 0.1;
  const double r = std::max(ratio * noise.sigma * step_length, ratio * kInformationSigmaFloor);
  return diagonal_information(t, r);
}

/// splitmix64 finalizer; used to derive independent seeds from one base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace detail {

struct PathPoint {
  Vec3 position;
  double yaw = 0.0;
};

using PathFn = std::function<PathPoint(double)>;

/// Piecewise-linear path parameterized by arc length.
class Polyline {
 public:
  explicit Polyline(std::vector<Vec3> waypoints) : pts_(std::move(waypoints)) {
    cum_.push_back(0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) cum_.push_back(cum_.back() + (pts_[i] - pts_[i - 1]).norm());
  }

  double length() const { return cum_.back(); }

  PathPoint at(double u) const {
    std::size_t seg = std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin();
    seg = std::clamp<std::size_t>(seg, 1, pts_.size() - 1);
    // Skip zero-length segments.
    while (seg + 1 < pts_.size() && cum_[seg] - cum_[seg - 1] <= 0.0) ++seg;
    const Vec3& a = pts_[seg - 1];
    const Vec3& b = pts_[seg];
    const double len = cum_[seg] - cum_[seg - 1];
    const double t = len > 0.0 ? std::clamp((u - cum_[seg - 1]) / len, 0.0, 1.0) : 0.0;
    const Vec3 d = b - a;
    return {a + t * d, std::atan2(d.y(), d.x())};
  }

 private:
  std::vector<Vec3> pts_;
  std::vector<double> cum_;
};

inline constexpr double kRetraceFraction = 0.5;   // multi_floor_stack
inline constexpr double kRampRunPerRise = 4.0;    // horizontal run per meter of climb

/// Path of total length `design_length` for a shape.
inline PathFn make_path(const ScenarioSpec& spec, double design_length) {
  const double D = design_length;
  switch (spec.shape) {
    case Shape::circle: {
      const double R = D / (2.0 * std::numbers::pi);
      return [R](double u) {
        const double a = u / R;
        return PathPoint{Vec3(R * std::sin(a), R * (1.0 - std::cos(a)), 0.0), a};
      };
    }
    case Shape::figure_eight: {
      const double C = 0.5 * D;
      const double R = C / (2.0 * std::numbers::pi);
      return [R, C](double u) {
        if (u < C) {
          const double a = u / R;
          return PathPoint{Vec3(R * std::sin(a), R * (1.0 - std::cos(a)), 0.0), a};
        }
        const double a = (u - C) / R;
        return PathPoint{Vec3(R * std::sin(a), -R * (1.0 - std::cos(a)), 0.0), -a};
      };
    }
    case Shape::grid_loop: {
      // One lap of a square block, then the first side again.
      const double L = D / 5.0;
      auto line = std::make_shared<Polyline>(std::vector<Vec3>{
          {0, 0, 0}, {L, 0, 0}, {L, L, 0}, {0, L, 0}, {0, 0, 0}, {L, 0, 0}});
      return [line](double u) { return line->at(u); };
    }
    case Shape::multi_floor_stack: {
      // Each floor: a square lap plus half its first side, then a straight
      // ramp up to the next floor, which repeats the layout.
      const int F = spec.floors;
      const double h = spec.floor_height;
      const double run = kRampRunPerRise * h;
      const double ramp = std::hypot(run, h);
      const double L = (D - (F - 1) * ramp) / (F * (4.0 + kRetraceFraction));
      if (!(L >= 2.0 * spec.keyframe_spacing)) {
        throw InvalidArgument("multi_floor_stack: too few keyframes for the requested floors and floor height");
      }
      std::vector<Vec3> w;
      Vec3 o = Vec3::Zero();
      for (int f = 0; f < F; ++f) {
        const double z = f * h;
        o.z() = z;
        for (const Vec3& c : {Vec3(0, 0, 0), Vec3(L, 0, 0), Vec3(L, L, 0), Vec3(0, L, 0), Vec3(0, 0, 0),
                              Vec3(kRetraceFraction * L, 0, 0)}) {
          w.push_back(o + c);
        }
        if (f + 1 < F) {
          o = o + Vec3(kRetraceFraction * L + run, 0, 0);
          o.z() = z + h;
        }
      }
      auto line = std::make_shared<Polyline>(std::move(w));
      return [line](double u) { return line->at(u); };
    }
  }
  throw InvalidArgument("unknown shape");
}

/// Path-length multiplier that keeps an open-loop run short of any revisit.
inline double open_loop_factor(const ScenarioSpec& spec) {
  switch (spec.shape) {
    case Shape::circle: return 2.0;
    case Shape::grid_loop: return 2.0;
    case Shape::figure_eight: return 4.0;
    case Shape::multi_floor_stack: return 2.0 * spec.floors;
  }
  return 2.0;
}

template <class Rng>
Tangent6 sample_tangent(Rng& rng, double translation_sigma, double rotation_sigma) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Tangent6 v;
  for (int i = 0; i < 3; ++i) v.rho(i) = translation_sigma * nd(rng);
  for (int i = 0; i < 3; ++i) v.phi(i) = rotation_sigma * nd(rng);
  return v;
}

}  // namespace detail

/// Keyframes spaced `keyframe_spacing` apart along the scenario's path.
inline Trajectory generate_ground_truth(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t n = spec.keyframe_count;
  const double s = spec.keyframe_spacing;
  double D = static_cast<double>(n) * s;
  if (spec.open_loop) D *= detail::open_loop_factor(spec);
  const auto path = detail::make_path(spec, D);
  std::vector<TrajectoryPoint> pts;
  pts.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = path(static_cast<double>(k) * s);
    pts.push_back({static_cast<double>(k) * spec.keyframe_period, Pose::from_yaw(p.yaw, p.position)});
  }
  return Trajectory(std::move(pts));
}

/// Perturb every relative step by exp(noise) and re-chain from the first pose.
inline Trajectory corrupt_odometry(const Trajectory& gt, const NoiseSpec& noise, std::uint64_t seed) {
  noise.validate();
  if (noise.sigma == 0.0 || gt.size() < 2) return gt;
  std::mt19937_64 rng(seed);
  std::vector<TrajectoryPoint> pts;
  pts.reserve(gt.size());
  pts.push_back(gt[0]);
  for (std::size_t k = 0; k + 1 < gt.size(); ++k) {
    const Pose step = gt.pose(k).inverse() * gt.pose(k + 1);
    const double len = step.translation().norm();
    const Tangent6 eps =
        detail::sample_tangent(rng, noise.sigma * len, noise.rotation_ratio * noise.sigma * len);
    pts.push_back({gt.timestamp(k + 1), pts.back().pose * (step * exp(eps))});
  }
  return Trajectory(std::move(pts));
}

/// Labelled true revisits and aliased false loops, sorted by query keyframe.
inline std::vector<LoopCandidate> generate_candidates(const Trajectory& gt, const CandidateSpec& spec,
                                                      std::uint64_t seed) {
  spec.validate();
  const std::size_t n = gt.size();
  const double r2 = spec.true_loop_radius * spec.true_loop_radius;
  const double f2 = spec.false_loop_min_distance * spec.false_loop_min_distance;
  std::vector<std::pair<std::size_t, std::size_t>> true_pool, false_pool;
  for (std::size_t i = spec.min_temporal_gap; i < n; ++i) {
    for (std::size_t j = 0; j + spec.min_temporal_gap <= i; ++j) {
      const double d2 = (gt.pose(i).translation() - gt.pose(j).translation()).squaredNorm();
      if (d2 <= r2) true_pool.emplace_back(i, j);
      if (d2 >= f2) false_pool.emplace_back(i, j);
    }
  }
  if (true_pool.size() < spec.true_count) {
    throw Unsatisfiable("requested " + std::to_string(spec.true_count) + " true loops but the trajectory has only " +
                        std::to_string(true_pool.size()) + " revisit pairs");
  }
  if (false_pool.size() < spec.false_count) {
    throw Unsatisfiable("requested " + std::to_string(spec.false_count) +
                        " false loops but the trajectory has only " + std::to_string(false_pool.size()) +
                        " sufficiently distant pairs");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> true_pick = true_pool;
  std::shuffle(true_pick.begin(), true_pick.end(), rng);
  true_pick.resize(spec.true_count);
  std::vector<std::pair<std::size_t, std::size_t>> false_pick = false_pool;
  std::shuffle(false_pick.begin(), false_pick.end(), rng);
  false_pick.resize(spec.false_count);

  const NoiseSpec& mn = spec.measurement_noise;
  const double ratio = mn.rotation_ratio;
  const Information info = information_for(mn);
  std::vector<LoopCandidate> out;
  out.reserve(spec.true_count + spec.false_count);
  for (const auto& [i, j] : true_pick) {
    const Pose rel = gt.pose(i).inverse() * gt.pose(j);
    const Tangent6 eps = detail::sample_tangent(rng, mn.sigma, ratio * mn.sigma);
    out.push_back({i, j, rel * exp(eps), info, true});
  }
  for (const auto& [i, j] : false_pick) {
    Pose base;
    if (spec.false_model == FalseLoopModel::aliased_copy && !true_pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, true_pool.size() - 1);
      const auto [ti, tj] = true_pool[pick(rng)];
      base = gt.pose(ti).inverse() * gt.pose(tj);
    }
    const Tangent6 eps = detail::sample_tangent(rng, mn.sigma, ratio * mn.sigma);
    out.push_back({i, j, base * exp(eps), info, false});
  }
  std::stable_sort(out.begin(), out.end(), [](const LoopCandidate& a, const LoopCandidate& b) {
    return a.query_id != b.query_id ? a.query_id < b.query_id : a.match_id < b.match_id;
  });
  return out;
}

}  // namespace loopgate::sim

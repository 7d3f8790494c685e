#pragma once

// Two laps of a 10 m square with a constant yaw bias in odometry.
// Candidate #1 closes lap one (40 -> 0), candidate #2 closes lap two (80 -> 0).

#include <numbers>

#include "loopgate/loopgate.hpp"

namespace loopgate::testing {

struct ScriptedStream {
  Trajectory ground_truth;
  Trajectory odometry;
  std::vector<LoopCandidate> candidates;
};

inline constexpr double kScriptedYawBias = 0.004;  // rad per step
// Observed scores: batch #1 0.322, batch #2 0.514, session #1 0.244, session #2 0.321.
inline constexpr double kScriptedTau = 0.4;

inline ScriptedStream scripted_stream() {
  std::vector<TrajectoryPoint> gt;
  for (std::size_t k = 0; k <= 80; ++k) {
    const std::size_t s = k % 40;
    const int side = static_cast<int>(s / 10);
    const double a = static_cast<double>(s % 10);
    Vec3 p;
    switch (side) {
      case 0: p = {a, 0, 0}; break;
      case 1: p = {10, a, 0}; break;
      case 2: p = {10 - a, 10, 0}; break;
      default: p = {0, 10 - a, 0}; break;
    }
    gt.push_back({static_cast<double>(k), Pose::from_yaw(side * std::numbers::pi / 2, p)});
  }
  ScriptedStream out;
  out.ground_truth = Trajectory(gt);
  std::vector<TrajectoryPoint> odo{gt[0]};
  for (std::size_t k = 0; k + 1 < gt.size(); ++k) {
    const Pose step = gt[k].pose.inverse() * gt[k + 1].pose;
    odo.push_back({gt[k + 1].timestamp, odo.back().pose * step * Pose::from_yaw(kScriptedYawBias)});
  }
  out.odometry = Trajectory(odo);
  const auto rel = [&](std::size_t i, std::size_t j) { return gt[i].pose.inverse() * gt[j].pose; };
  out.candidates = {{40, 0, rel(40, 0), Information::Identity(), true},
                    {80, 0, rel(80, 0), Information::Identity(), true}};
  return out;
}

}  // namespace loopgate::testing

#pragma once

// Simulated runs and the noise-level sweep: simulate, verify every candidate
// against the drifting odometry, and collect scored labels per noise level.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "loopgate/evaluation.hpp"
#include "loopgate/simulator.hpp"
#include "loopgate/verifier.hpp"

namespace loopgate::experiment {

struct SimulatedRun {
  Trajectory ground_truth;
  Trajectory odometry;
  std::vector<LoopCandidate> candidates;
  Information odometry_information = Information::Identity();
};

// Streams split off one run seed.
inline constexpr std::uint64_t kOdometryStream = 1;
inline constexpr std::uint64_t kCandidateStream = 2;

inline SimulatedRun simulate_run(const sim::ScenarioSpec& scenario, const sim::NoiseSpec& noise,
                                 const sim::CandidateSpec& candidates, std::uint64_t seed) {
  SimulatedRun run;
  run.ground_truth = sim::generate_ground_truth(scenario);
  run.odometry = sim::corrupt_odometry(run.ground_truth, noise, sim::mix_seed(seed, kOdometryStream));
  run.candidates = sim::generate_candidates(run.ground_truth, candidates, sim::mix_seed(seed, kCandidateStream));
  run.odometry_information = sim::information_for(noise, scenario.keyframe_spacing);
  return run;
}

inline std::vector<VerdictRecord> verify_run(const SimulatedRun& run, double tau, const SolverConfig& solver = {}) {
  VerifierConfig cfg;
  cfg.threshold_tau = tau;
  cfg.solver = solver;
  cfg.odometry_information = run.odometry_information;
  return verify_batch(run.odometry, run.candidates, cfg);
}

inline std::vector<eval::ScoredLabel> scored_labels(const std::vector<VerdictRecord>& verdicts) {
  std::vector<eval::ScoredLabel> out;
  out.reserve(verdicts.size());
  for (const auto& v : verdicts) {
    if (!v.candidate.label) throw InvalidArgument("verdict has no ground-truth label");
    out.push_back({eval::confidence_from_score(v.score), *v.candidate.label});
  }
  return out;
}

/// Worker count from LOOPGATE_THREADS, else hardware concurrency.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("LOOPGATE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepSpec {
  sim::ScenarioSpec scenario;
  sim::CandidateSpec candidates;
  std::vector<double> sigmas{0.01, 0.05, 0.1, 0.175};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 0;
  double rotation_ratio = 0.1;
  /// Loop measurement noise follows the odometry sigma when true.
  bool loop_noise_follows_sigma = true;
  /// Threshold only matters for the accepted flag; rankings use the score.
  double tau = 0.1;
  SolverConfig solver;
  unsigned threads = 0;  // 0: thread_budget()
};

struct SigmaSummary {
  double sigma = 0.0;
  std::vector<eval::ScoredLabel> labels;  // pooled over seeds, in seed order
  std::vector<double> seed_ap;
  double pooled_ap = 0.0;
  double pooled_mr = 0.0;
  double mean_ap = 0.0;
  double stderr_ap = 0.0;  // standard error of mean_ap
  std::size_t non_converged = 0;
};

/// Cell seed for (sigma index, seed index); independent of scheduling.
inline std::uint64_t cell_seed(std::uint64_t base, std::size_t sigma_index, std::size_t seed_index) {
  return sim::mix_seed(sim::mix_seed(base, sigma_index), seed_index);
}

inline std::vector<SigmaSummary> run_sweep(const SweepSpec& spec) {
  if (spec.sigmas.empty()) throw InvalidArgument("sweep needs at least one sigma");
  if (spec.seeds < 1) throw InvalidArgument("sweep needs at least one seed");
  const std::size_t cells = spec.sigmas.size() * spec.seeds;
  std::vector<std::vector<VerdictRecord>> results(cells);

  auto run_cell = [&](std::size_t c) {
    const std::size_t si = c / spec.seeds, k = c % spec.seeds;
    sim::NoiseSpec noise{spec.sigmas[si], spec.rotation_ratio};
    sim::CandidateSpec cs = spec.candidates;
    if (spec.loop_noise_follows_sigma) cs.measurement_noise = noise;
    const auto run = simulate_run(spec.scenario, noise, cs, cell_seed(spec.base_seed, si, k));
    results[c] = verify_run(run, spec.tau, spec.solver);
  };

  const unsigned threads =
      std::max(1u, std::min<unsigned>(spec.threads ? spec.threads : thread_budget(), static_cast<unsigned>(cells)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned w) {
    try {
      for (std::size_t c; (c = next.fetch_add(1)) < cells;) run_cell(c);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SigmaSummary> out;
  for (std::size_t si = 0; si < spec.sigmas.size(); ++si) {
    SigmaSummary s;
    s.sigma = spec.sigmas[si];
    for (std::size_t k = 0; k < spec.seeds; ++k) {
      const auto& verdicts = results[si * spec.seeds + k];
      const auto labels = scored_labels(verdicts);
      s.seed_ap.push_back(eval::average_precision(labels));
      s.labels.insert(s.labels.end(), labels.begin(), labels.end());
      for (const auto& v : verdicts) s.non_converged += v.converged ? 0 : 1;
    }
    s.pooled_ap = eval::average_precision(s.labels);
    s.pooled_mr = eval::max_recall_at_full_precision(s.labels);
    double sum = 0.0;
    for (double a : s.seed_ap) sum += a;
    const double n = static_cast<double>(s.seed_ap.size());
    s.mean_ap = sum / n;
    if (s.seed_ap.size() > 1) {
      double ss = 0.0;
      for (double a : s.seed_ap) ss += (a - s.mean_ap) * (a - s.mean_ap);
      s.stderr_ap = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Mean AP may rise between adjacent sigmas by at most `bands` combined
/// standard errors.
inline bool ap_non_increasing(const std::vector<SigmaSummary>& s, double bands = 3.0) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double se = std::hypot(s[i].stderr_ap, s[i - 1].stderr_ap);
    if (s[i].mean_ap > s[i - 1].mean_ap + bands * se) return false;
  }
  return true;
}

}  // namespace loopgate::experiment

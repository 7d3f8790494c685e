// loopgate: simulate runs, verify loop candidates, sweep noise levels and
// evaluate results. Every command leaves a key = value manifest behind.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loopgate/loopgate.hpp"

namespace fs = std::filesystem;
using namespace loopgate;

namespace {

// -- manifest -------------------------------------------------------------------

class Manifest {
 public:
  void str(const std::string& k, const std::string& v) { rows_.emplace_back(k, nlohmann::json(v).dump()); }
  void num(const std::string& k, double v) { rows_.emplace_back(k, io::format_exact(v)); }
  void integer(const std::string& k, long long v) { rows_.emplace_back(k, std::to_string(v)); }
  void flag(const std::string& k, bool v) { rows_.emplace_back(k, v ? "true" : "false"); }
  void list(const std::string& k, const std::vector<std::string>& v) { rows_.emplace_back(k, nlohmann::json(v).dump()); }
  void nums(const std::string& k, const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + io::format_exact(v[i]);
    rows_.emplace_back(k, s + "]");
  }

  std::string text() const {
    std::string out;
    for (const auto& [k, v] : rows_) out += k + " = " + v + '\n';
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

std::vector<std::string> manifest_argv(const fs::path& path) {
  for (const auto& line : io::read_lines(path)) {
    const auto t = io::trim(line);
    if (t.rfind("argv", 0) != 0) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) break;
    try {
      return nlohmann::json::parse(t.substr(eq + 1)).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), 0, std::string("bad argv entry: ") + e.what());
    }
  }
  throw ParseError(path.string(), 0, "manifest has no argv entry");
}

// -- shared option groups ---------------------------------------------------------

struct ScenarioOpts {
  std::string shape = "grid_loop";
  std::size_t keyframes = 200;
  double spacing = 1.0;
  int floors = 2;
  double floor_height = 3.0;
  bool open_loop = false;
  double period = 1.0;
  double radius = 2.0;
  double false_distance = 10.0;
  std::size_t true_loops = 20;
  std::size_t false_loops = 20;
  std::size_t min_gap = 10;
  double rotation_ratio = 0.1;
  std::optional<double> loop_sigma;
  std::string false_model = "near_identity";

  void add(CLI::App* c) {
    c->add_option("--shape", shape, "grid_loop | circle | figure_eight | multi_floor_stack")->capture_default_str();
    c->add_option("--keyframes", keyframes, "keyframe count")->capture_default_str();
    c->add_option("--spacing", spacing, "meters between keyframes")->capture_default_str();
    c->add_option("--floors", floors, "floors (multi_floor_stack)")->capture_default_str();
    c->add_option("--floor-height", floor_height, "meters per floor (multi_floor_stack)")->capture_default_str();
    c->add_flag("--open-loop", open_loop, "stop before the path revisits itself");
    c->add_option("--period", period, "seconds between keyframes")->capture_default_str();
    c->add_option("--radius", radius, "ground-truth distance for a true loop")->capture_default_str();
    c->add_option("--false-distance", false_distance, "minimum ground-truth distance for a false loop")
        ->capture_default_str();
    c->add_option("--true-loops", true_loops)->capture_default_str();
    c->add_option("--false-loops", false_loops)->capture_default_str();
    c->add_option("--min-gap", min_gap, "minimum keyframe gap of a candidate")->capture_default_str();
    c->add_option("--rotation-ratio", rotation_ratio, "rotation noise per unit of sigma")->capture_default_str();
    c->add_option("--loop-sigma", loop_sigma, "loop measurement noise (default: follows --sigma)");
    c->add_option("--false-model", false_model, "near_identity | aliased_copy")->capture_default_str();
  }

  sim::ScenarioSpec scenario() const {
    sim::ScenarioSpec s;
    s.shape = sim::parse_shape(shape);
    s.keyframe_count = keyframes;
    s.keyframe_spacing = spacing;
    s.floors = floors;
    s.floor_height = floor_height;
    s.open_loop = open_loop;
    s.keyframe_period = period;
    return s;
  }

  sim::CandidateSpec candidates(double sigma) const {
    sim::CandidateSpec c;
    c.true_loop_radius = radius;
    c.false_loop_min_distance = false_distance;
    c.true_count = true_loops;
    c.false_count = false_loops;
    c.min_temporal_gap = min_gap;
    c.measurement_noise = {loop_sigma.value_or(sigma), rotation_ratio};
    if (false_model == "near_identity") {
      c.false_model = sim::FalseLoopModel::near_identity;
    } else if (false_model == "aliased_copy") {
      c.false_model = sim::FalseLoopModel::aliased_copy;
    } else {
      throw InvalidArgument("unknown false-loop model '" + false_model + "'");
    }
    return c;
  }

  void record(Manifest& m) const {
    m.str("shape", shape);
    m.integer("keyframes", static_cast<long long>(keyframes));
    m.num("spacing", spacing);
    m.integer("floors", floors);
    m.num("floor_height", floor_height);
    m.flag("open_loop", open_loop);
    m.num("period", period);
    m.num("radius", radius);
    m.num("false_distance", false_distance);
    m.integer("true_loops", static_cast<long long>(true_loops));
    m.integer("false_loops", static_cast<long long>(false_loops));
    m.integer("min_gap", static_cast<long long>(min_gap));
    m.num("rotation_ratio", rotation_ratio);
    if (loop_sigma) m.num("loop_sigma", *loop_sigma);
    m.str("false_model", false_model);
  }
};

// -- simulate -----------------------------------------------------------------------

struct SimulateOpts {
  ScenarioOpts scenario;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_simulate(const SimulateOpts& o, Manifest& m) {
  o.scenario.record(m);
  m.num("sigma", o.sigma);
  m.integer("seed", static_cast<long long>(o.seed));
  m.str("out", o.out);

  const sim::NoiseSpec noise{o.sigma, o.scenario.rotation_ratio};
  const auto cands = o.scenario.candidates(o.sigma);
  const auto run = experiment::simulate_run(o.scenario.scenario(), noise, cands, o.seed);
  const fs::path dir(o.out);
  io::save_tum(dir / "ground_truth.tum", run.ground_truth);
  io::save_tum(dir / "odometry.tum", run.odometry);
  io::save_g2o(dir / "graph.g2o", from_odometry(run.odometry, run.odometry_information));
  io::save_candidates(dir / "candidates.csv", run.candidates);

  m.num("odom_step_length", o.scenario.spacing);
  m.num("loop_noise_sigma", cands.measurement_noise.sigma);
  m.list("outputs", {"ground_truth.tum", "odometry.tum", "graph.g2o", "candidates.csv"});
}

// -- verify -------------------------------------------------------------------------

struct VerifyOpts {
  std::string trajectory, candidates, out;
  double tau = 0.0;
  bool sequential = false;
  std::string prior = "corrected";
  std::optional<double> odom_sigma, loop_sigma, step_length;
  double rotation_ratio = 0.1;
  int max_iterations = SolverConfig{}.max_iterations;
};

double mean_step_length(const Trajectory& t) {
  if (t.size() < 2) return 1.0;
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) sum += (t.pose(k + 1).translation() - t.pose(k).translation()).norm();
  return sum / static_cast<double>(t.size() - 1);
}

void cmd_verify(const VerifyOpts& o, Manifest& m) {
  m.str("trajectory", o.trajectory);
  m.str("candidates", o.candidates);
  m.str("out", o.out);
  m.num("tau", o.tau);
  m.flag("sequential", o.sequential);
  if (o.sequential) m.str("prior", o.prior);
  m.num("rotation_ratio", o.rotation_ratio);

  const Trajectory traj = io::read_tum(o.trajectory);
  VerifierConfig cfg;
  cfg.threshold_tau = o.tau;
  cfg.solver.max_iterations = o.max_iterations;
  m.integer("max_iterations", o.max_iterations);
  if (o.odom_sigma) {
    const double step = o.step_length.value_or(mean_step_length(traj));
    cfg.odometry_information = sim::information_for({*o.odom_sigma, o.rotation_ratio}, step);
    m.num("odom_sigma", *o.odom_sigma);
    m.num("step_length", step);
  }
  Information loop_info = Information::Identity();
  if (o.loop_sigma) {
    loop_info = sim::information_for({*o.loop_sigma, o.rotation_ratio});
    m.num("loop_sigma", *o.loop_sigma);
  }
  cfg.validate();
  const auto cands = io::read_candidates(o.candidates, loop_info);

  std::vector<VerdictRecord> verdicts;
  if (o.sequential) {
    SessionConfig sc{cfg, SessionPrior::corrected};
    if (o.prior == "raw_odometry") {
      sc.prior = SessionPrior::raw_odometry;
    } else if (o.prior != "corrected") {
      throw InvalidArgument("unknown session prior '" + o.prior + "'");
    }
    verdicts = verify_sequential(traj, cands, sc);
  } else {
    verdicts = verify_batch(traj, cands, cfg);
  }
  io::save_verdicts(o.out, verdicts);

  std::size_t accepted = 0, scored = 0;
  for (const auto& v : verdicts) {
    accepted += v.accepted;
    scored += v.score.has_value();
  }
  m.integer("candidates_total", static_cast<long long>(verdicts.size()));
  m.integer("candidates_scored", static_cast<long long>(scored));
  m.integer("candidates_accepted", static_cast<long long>(accepted));
}

// -- sweep --------------------------------------------------------------------------

struct SweepOpts {
  ScenarioOpts scenario;
  std::vector<double> sigmas{0.01, 0.05, 0.1, 0.175};
  std::size_t seeds = 20;
  std::uint64_t seed = 0;
  double tau = 0.1;
  unsigned threads = 0;
  std::string out;
};

std::string sigma_tag(double s) {
  std::string t = io::format_exact(s);
  for (char& c : t) {
    if (c == '.') c = 'p';
  }
  return t;
}

void cmd_sweep(const SweepOpts& o, Manifest& m) {
  o.scenario.record(m);
  m.nums("sigmas", o.sigmas);
  m.integer("seeds", static_cast<long long>(o.seeds));
  m.integer("seed", static_cast<long long>(o.seed));
  m.num("tau", o.tau);
  m.str("out", o.out);

  experiment::SweepSpec spec;
  spec.scenario = o.scenario.scenario();
  spec.candidates = o.scenario.candidates(0.0);
  spec.loop_noise_follows_sigma = !o.scenario.loop_sigma.has_value();
  spec.sigmas = o.sigmas;
  spec.seeds = o.seeds;
  spec.base_seed = o.seed;
  spec.rotation_ratio = o.scenario.rotation_ratio;
  spec.tau = o.tau;
  spec.threads = o.threads;
  const auto results = experiment::run_sweep(spec);

  const fs::path dir(o.out);
  std::string table = "sigma,AP,MR,mean_AP,stderr_AP,tau_full_precision,non_converged\n";
  std::vector<report::PrSeries> series;
  std::vector<std::string> outputs;
  for (const auto& r : results) {
    const auto curve = eval::pr_curve(r.labels);
    const std::string name = "pr_sigma_" + sigma_tag(r.sigma) + ".csv";
    io::write_file_atomic(dir / name, report::pr_curve_csv(curve));
    outputs.push_back(name);
    // Loosest score threshold that keeps precision at 1.
    std::string tau_fp;
    for (const auto& p : curve) {
      if (p.precision == 1.0 && p.recall == r.pooled_mr) tau_fp = io::format_exact(-p.threshold);
    }
    table += io::format_exact(r.sigma) + ',' + eval::format_percent(r.pooled_ap) + ',' +
             eval::format_percent(r.pooled_mr) + ',' + eval::format_percent(r.mean_ap) + ',' +
             eval::format_percent(r.stderr_ap) + ',' + tau_fp + ',' + std::to_string(r.non_converged) + '\n';
    series.push_back({"sigma=" + io::format_exact(r.sigma), curve});
  }
  io::write_file_atomic(dir / "summary.csv", table);
  io::write_file_atomic(dir / "pr_curves.svg", report::pr_curves_svg(series));
  outputs.push_back("summary.csv");
  outputs.push_back("pr_curves.svg");
  m.flag("ap_non_increasing_3se", experiment::ap_non_increasing(results));
  m.list("outputs", outputs);
}

// -- eval ---------------------------------------------------------------------------

struct EvalOpts {
  std::string verdicts, est, gt, out, table;
  std::size_t k = 5;
  std::string align = "sim3";
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_file_atomic(out, text);
  }
}

void cmd_eval(const EvalOpts& o, Manifest& m) {
  const bool classify = !o.verdicts.empty();
  const bool traj = !o.est.empty() || !o.gt.empty();
  if (classify == traj) throw InvalidArgument("eval needs either --verdicts or both --est and --gt");
  if (!o.out.empty()) m.str("out", o.out);

  if (classify) {
    m.str("verdicts", o.verdicts);
    std::vector<eval::ScoredLabel> items;
    for (const auto& r : io::read_verdicts(o.verdicts)) {
      if (!r.label) {
        throw InvalidArgument("verdict " + std::to_string(r.query_id) + " -> " + std::to_string(r.match_id) +
                              " has no label");
      }
      items.push_back({eval::confidence_from_score(r.score), *r.label});
    }
    emit(o.out, report::metrics_csv(report::classification_rows(items)));
    return;
  }

  if (o.est.empty() || o.gt.empty()) throw InvalidArgument("trajectory evaluation needs both --est and --gt");
  m.str("est", o.est);
  m.str("gt", o.gt);
  m.integer("k", static_cast<long long>(o.k));
  m.str("align", o.align);
  AlignmentMode mode;
  if (o.align == "sim3") {
    mode = AlignmentMode::sim3;
  } else if (o.align == "se3") {
    mode = AlignmentMode::se3;
  } else {
    throw InvalidArgument("unknown alignment '" + o.align + "'");
  }
  const Trajectory est = io::read_tum(o.est);
  const Trajectory gt = io::read_tum(o.gt);
  const double ate = eval::ate_rmse(est, gt, mode);
  const auto t = eval::temporal_ate(est, gt, o.k, mode);
  emit(o.out, report::metrics_csv(report::trajectory_rows(ate, t)));
  if (!o.table.empty()) {
    io::write_file_atomic(o.table, report::tate_table_csv(t));
    m.str("table", o.table);
  }
}

// -- driver -------------------------------------------------------------------------

std::string error_line(const std::string& kind, const std::string& message) {
  return "loopgate-error kind=" + kind + " message=" + nlohmann::json(message).dump();
}

int dispatch(const std::vector<std::string>& args, const std::function<void(Manifest&)>& body,
             const std::string& command, const fs::path& manifest_path) {
  Manifest m;
  m.str("subcommand", command);
  m.list("argv", args);
  m.str("version", LOOPGATE_VERSION);
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  std::string kind, message;
  try {
    body(m);
  } catch (const Error& e) {
    kind = e.kind();
    message = e.what();
  } catch (const std::exception& e) {
    kind = "internal";
    message = e.what();
  }
  if (!kind.empty()) code = 1;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.str("status", code == 0 ? "ok" : "error");
  if (code) {
    m.str("error_kind", kind);
    m.str("error_message", message);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", secs);
  m.str("duration_s", buf);
  if (!manifest_path.empty()) {
    try {
      io::write_file_atomic(manifest_path, m.text());
    } catch (const Error& e) {
      if (code == 0) {
        kind = e.kind();
        message = e.what();
        code = 1;
      }
    }
  }
  if (code) std::cerr << error_line(kind, message) << '\n';
  return code;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Loop-closure verification by trajectory change"};
  app.set_version_flag("--version", std::string(LOOPGATE_VERSION));
  app.require_subcommand(1);

  SimulateOpts sim_o;
  auto* sim_c = app.add_subcommand("simulate", "Write a simulated run directory");
  sim_o.scenario.add(sim_c);
  sim_c->add_option("--sigma", sim_o.sigma, "odometry noise level")->capture_default_str();
  sim_c->add_option("--seed", sim_o.seed)->capture_default_str();
  sim_c->add_option("--out", sim_o.out, "run directory")->required();

  VerifyOpts ver_o;
  auto* ver_c = app.add_subcommand("verify", "Verify loop candidates against a trajectory");
  ver_c->add_option("--trajectory", ver_o.trajectory, "TUM trajectory")->required()->check(CLI::ExistingFile);
  ver_c->add_option("--candidates", ver_o.candidates, "candidate CSV")->required()->check(CLI::ExistingFile);
  ver_c->add_option("--tau", ver_o.tau, "acceptance threshold in meters")->required();
  ver_c->add_flag("--sequential", ver_o.sequential, "replay candidates through a verification session");
  ver_c->add_option("--prior", ver_o.prior, "session prior: corrected | raw_odometry")->capture_default_str();
  ver_c->add_option("--odom-sigma", ver_o.odom_sigma, "odometry noise level (default: identity information)");
  ver_c->add_option("--step-length", ver_o.step_length, "step length for --odom-sigma (default: mean step)");
  ver_c->add_option("--loop-sigma", ver_o.loop_sigma, "loop noise level (default: identity information)");
  ver_c->add_option("--rotation-ratio", ver_o.rotation_ratio)->capture_default_str();
  ver_c->add_option("--max-iterations", ver_o.max_iterations, "solver iteration cap")->capture_default_str();
  ver_c->add_option("--out", ver_o.out, "verdict CSV")->required();

  SweepOpts sw_o;
  auto* sw_c = app.add_subcommand("sweep", "Precision-recall over noise levels and seeds");
  sw_o.scenario.add(sw_c);
  sw_c->add_option("--sigmas", sw_o.sigmas, "comma-separated noise levels")->delimiter(',')->capture_default_str();
  sw_c->add_option("--seeds", sw_o.seeds, "runs per noise level")->capture_default_str();
  sw_c->add_option("--seed", sw_o.seed, "base seed")->capture_default_str();
  sw_c->add_option("--tau", sw_o.tau, "threshold for the accepted flag")->capture_default_str();
  sw_c->add_option("--threads", sw_o.threads, "worker cap (default: LOOPGATE_THREADS or all cores)");
  sw_c->add_option("--out", sw_o.out, "report directory")->required();

  EvalOpts ev_o;
  auto* ev_c = app.add_subcommand("eval", "Classification or trajectory metrics");
  ev_c->add_option("--verdicts", ev_o.verdicts, "verdict CSV with labels")->check(CLI::ExistingFile);
  ev_c->add_option("--est", ev_o.est, "estimated TUM trajectory")->check(CLI::ExistingFile);
  ev_c->add_option("--gt", ev_o.gt, "ground-truth TUM trajectory")->check(CLI::ExistingFile);
  ev_c->add_option("--k", ev_o.k, "temporal ATE checkpoints")->capture_default_str();
  ev_c->add_option("--align", ev_o.align, "sim3 | se3")->capture_default_str();
  ev_c->add_option("--table", ev_o.table, "also write t0..tATE as one table row");
  ev_c->add_option("--out", ev_o.out, "metrics CSV (default: stdout)");

  std::string rerun_manifest;
  auto* re_c = app.add_subcommand("rerun", "Repeat the command recorded in a manifest");
  re_c->add_option("--manifest", rerun_manifest)->required()->check(CLI::ExistingFile);

  std::string manifest_override;
  for (auto* c : {ver_c, ev_c}) c->add_option("--manifest", manifest_override, "manifest path");

  std::vector<const char*> argv{"loopgate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << error_line("usage", e.what()) << '\n';
    return 2;
  }

  if (re_c->parsed()) {
    std::vector<std::string> again;
    try {
      again = manifest_argv(rerun_manifest);
    } catch (const Error& e) {
      std::cerr << error_line(e.kind(), e.what()) << '\n';
      return 1;
    }
    if (!again.empty() && again.front() == "rerun") {
      std::cerr << error_line("invalid_argument", "manifest records another rerun") << '\n';
      return 1;
    }
    return run(again);
  }
  if (sim_c->parsed()) {
    return dispatch(args, [&](Manifest& m) { cmd_simulate(sim_o, m); }, "simulate",
                    fs::path(sim_o.out) / "manifest.toml");
  }
  if (sw_c->parsed()) {
    return dispatch(args, [&](Manifest& m) { cmd_sweep(sw_o, m); }, "sweep",
                    fs::path(sw_o.out) / "manifest.toml");
  }
  if (ver_c->parsed()) {
    const fs::path mp = manifest_override.empty() ? fs::path(ver_o.out + ".manifest.toml") : fs::path(manifest_override);
    return dispatch(args, [&](Manifest& m) { cmd_verify(ver_o, m); }, "verify", mp);
  }
  fs::path mp = manifest_override;
  if (mp.empty() && !ev_o.out.empty()) mp = ev_o.out + ".manifest.toml";
  return dispatch(args, [&](Manifest& m) { cmd_eval(ev_o, m); }, "eval", mp);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

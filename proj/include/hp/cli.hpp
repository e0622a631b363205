#pragma once

// Command-line front end shared by the harmonic-planner binary and the tests.
//
// exit codes: 0 success, 1 bad input or I/O failure, 2 single-class training
// data, 3 start or goal state in collision, 4 plan not feasible.
//
// Every CSV starts with a "# hp-csv v1 <kind>" line followed by the header.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hp/bench.hpp"
#include "hp/fourier_demo.hpp"
#include "hp/problem_io.hpp"

namespace hp::cli {

enum ExitCode : int {
  kOk = 0,
  kBadInput = 1,
  kSingleClass = 2,
  kEndpointCollision = 3,
  kInfeasible = 4,
};

inline constexpr const char* kCsvVersion = "# hp-csv v1";

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Opens `path` for writing, or hands back `fallback` when the path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw IoError("cannot write " + path);
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

struct TrainFieldOptions {
  std::string robot;
  std::string scene;
  std::string out;
  std::size_t points = 20000;
  double sigma = FieldTraining{}.sigma;  // <= 0: nearest-neighbor heuristic
  double c_box = 10.0;
  double epsilon = 0.05;
  std::uint64_t seed = 1;
};

/// Accuracy and collided-recall on a fresh SDF-labeled sample.
inline ClassificationReport held_out_report(const CollisionFieldModel& model, const RobotModel& robot,
                                            const Scene& scene, double epsilon, std::size_t points,
                                            std::uint64_t seed) {
  DatasetParams data;
  data.n_samples = std::max<std::size_t>(1, points / std::max<std::size_t>(1, robot.balls().size()));
  data.epsilon = epsilon;
  data.seed = seed;
  data.min_collided_fraction = 0.0;
  return classify(model, generate_dataset(robot, scene, data));
}

inline int train_field(const TrainFieldOptions& opts, std::ostream& out, std::ostream& err) {
  const RobotModel robot = RobotModel::load(opts.robot);
  const Scene scene = Scene::load(opts.scene);
  DatasetParams data;
  data.n_samples = std::max<std::size_t>(1, opts.points / std::max<std::size_t>(1, robot.balls().size()));
  data.epsilon = opts.epsilon;
  data.seed = opts.seed;
  const std::vector<LabeledPoint> dataset = generate_dataset(robot, scene, data);
  const auto collided = std::count_if(dataset.begin(), dataset.end(), [](const auto& p) { return p.y > 0; });
  if (collided == 0 || collided == static_cast<std::ptrdiff_t>(dataset.size())) {
    err << "error: " << (collided == 0 ? "no collided samples" : "no safe samples") << " in the training data\n";
    return kSingleClass;
  }
  SvmHyper hyper;
  hyper.sigma = opts.sigma;
  hyper.c_box = opts.c_box;
  hyper.seed = opts.seed;
  const auto started = std::chrono::steady_clock::now();
  const TrainResult trained = train_smo(dataset, hyper);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!opts.out.empty()) trained.model.save(opts.out);

  const ClassificationReport train = classify(trained.model, dataset);
  const ClassificationReport held_out =
      held_out_report(trained.model, robot, scene, opts.epsilon, opts.points, opts.seed + 1);
  out << "points=" << dataset.size() << "\n"
      << "support_vectors=" << trained.model.support_vectors().size() << "\n"
      << "sigma=" << fmt(trained.model.sigma()) << "\n"
      << "converged=" << (trained.converged ? 1 : 0) << "\n"
      << "training_accuracy=" << fmt(train.accuracy) << "\n"
      << "training_recall=" << fmt(train.collided_recall) << "\n"
      << "held_out_accuracy=" << fmt(held_out.accuracy) << "\n"
      << "collided_recall=" << fmt(held_out.collided_recall) << "\n"
      << "train_time_s=" << fmt(seconds) << "\n";
  return kOk;
}

struct PlanOverrides {
  std::optional<double> rho, lambda, alpha, beta, step_tol, margin;
  std::optional<int> max_iter;
  std::string field;  // "raw" or "svm"; empty keeps the problem's choice
  std::string model;  // overrides the problem's svm_model
};

inline void apply(const PlanOverrides& o, AipParams& params) {
  if (o.rho) params.rho = *o.rho;
  if (o.lambda) params.lambda = *o.lambda;
  if (o.alpha) params.alpha = *o.alpha;
  if (o.beta) params.beta = *o.beta;
  if (o.step_tol) params.step_tol = *o.step_tol;
  if (o.margin) params.margin = *o.margin;
  if (o.max_iter) params.max_iter = *o.max_iter;
  if (!o.field.empty()) params.field_source = parse_field_source(o.field);
}

/// True when some ball has nonzero buffered collision cost at `theta`.
inline bool in_collision(const PlanProblem& problem, const Vec& theta) {
  for (const BallState& ball : forward_kinematics(problem.robot, theta)) {
    if (collision_cost(problem.scene.signed_distance(ball.center, ball.radius).distance, problem.cost).cost > 0.0) {
      return true;
    }
  }
  return false;
}

inline void write_trajectory_csv(std::ostream& os, const PlanProblem& problem, const AmplitudeMatrix& a,
                                 int oversample = 10) {
  os << kCsvVersion << " trajectory\n" << "t";
  for (Index j = 1; j <= a.joints(); ++j) os << ",theta_" << j;
  os << "\n";
  for (int k = 0; k <= oversample * problem.grid.half(); ++k) {
    const double t = static_cast<double>(k) / oversample;
    const Vec theta = evaluate(a, t, problem.grid);
    os << fmt(t);
    for (Index j = 0; j < theta.size(); ++j) os << "," << fmt(theta(j));
    os << "\n";
  }
}

inline int plan(const std::string& problem_path, const std::string& out_csv, const PlanOverrides& overrides,
                std::ostream& out, std::ostream& err) {
  ProblemFile pf = load_problem(problem_path);
  apply(overrides, pf.params);
  pf.params.validate();
  if (in_collision(pf.problem, pf.problem.start)) {
    err << "error: start state in collision\n";
    return kEndpointCollision;
  }
  if (in_collision(pf.problem, pf.problem.goal)) {
    err << "error: goal state in collision\n";
    return kEndpointCollision;
  }
  std::optional<CollisionFieldModel> model;
  if (pf.params.field_source == FieldSource::learned_svm) {
    if (!overrides.model.empty()) {
      model = CollisionFieldModel::load(overrides.model);
    } else if (pf.svm_model) {
      model = CollisionFieldModel::load(*pf.svm_model);
    } else {
      model = train_scene_field(pf, pf.seed, FieldTraining{}).model;
    }
  }
  const PlanResult result = optimize(pf.problem, pf.params, model ? &*model : nullptr);
  if (!result.abort_reason.empty()) err << "warning: " << result.abort_reason << "\n";

  std::ostream& summary = out_csv.empty() ? err : out;
  Sink sink(out_csv, out);
  write_trajectory_csv(sink.get(), pf.problem, result.amplitudes);
  summary << "converged=" << (result.converged ? 1 : 0) << " feasible=" << (result.feasible ? 1 : 0)
          << " iterations=" << result.iterations << " hamiltonian=" << fmt(result.final_hamiltonian)
          << " time_s=" << fmt(result.wall_time_s) << "\n";
  return result.feasible ? kOk : kInfeasible;
}

struct BenchCliOptions {
  std::string suite;
  std::string mode = "both";
  std::string out;
  BenchOptions bench{};
};

inline int bench(const BenchCliOptions& opts, std::ostream& out, std::ostream& err) {
  const BenchmarkSuite suite = load_suite(opts.suite);
  std::vector<BenchMode> modes;
  if (opts.mode == "aip" || opts.mode == "both") modes.push_back(BenchMode::aip);
  if (opts.mode == "ffsomp" || opts.mode == "both") modes.push_back(BenchMode::ffsomp);
  if (modes.empty()) {
    err << "error: --mode must be aip, ffsomp or both\n";
    return kBadInput;
  }
  std::vector<BenchRun> runs;
  for (BenchMode mode : modes) {
    const auto batch = run_benchmark(suite, mode, opts.bench);
    runs.insert(runs.end(), batch.begin(), batch.end());
  }

  std::ostringstream csv;
  csv << kCsvVersion << " bench\n" << "class,mode,runs,success_rate,mean_time_s,std_time_s\n";
  for (const ClassSummary& s : summarize(runs)) {
    csv << s.task_class << "," << to_string(s.mode) << "," << s.runs << "," << fmt(s.success_rate) << ","
        << fmt(s.mean_time_s) << "," << fmt(s.std_time_s) << "\n";
  }
  double endpoint = 0.0, limits = 0.0;
  int timeouts = 0;
  for (const BenchRun& r : runs) {
    endpoint = std::max(endpoint, r.max_endpoint_error);
    limits = std::max(limits, r.max_limit_violation);
    timeouts += r.timed_out ? 1 : 0;
  }
  if (opts.out.empty()) {
    out << csv.str();
  } else {
    Sink sink(opts.out, out);
    sink.get() << csv.str();
    out << csv.str();
  }
  out << "# max_endpoint_error=" << fmt(endpoint) << " max_limit_violation=" << fmt(limits)
      << " timeouts=" << timeouts << "\n";
  return kOk;
}

struct DemoOptions {
  int harmonics = 5;
  int period = 40;
  std::string reference = "ramp";
  std::string out;
};

inline int demo_ffs(const DemoOptions& opts, std::ostream& out, std::ostream& err) {
  const double half = 0.5 * opts.period;
  std::function<double(double)> reference;
  if (opts.reference == "ramp") {
    reference = [half](double t) { return t / half; };
  } else if (opts.reference == "step") {
    reference = [half](double t) { return t < 0.5 * half ? 0.0 : 1.0; };
  } else if (opts.reference == "constant") {
    reference = [](double) { return 1.0; };
  } else {
    err << "error: --reference must be ramp, step or constant\n";
    return kBadInput;
  }
  const FitComparison fit = compare_fits(reference, SampleGrid(opts.period), opts.harmonics);
  std::ostream& summary = opts.out.empty() ? err : out;
  Sink sink(opts.out, out);
  sink.get() << kCsvVersion << " demo-ffs\n" << "t,reference,cosine_fit,fourier_fit\n";
  for (std::size_t k = 0; k < fit.times.size(); ++k) {
    sink.get() << fmt(fit.times[k]) << "," << fmt(fit.reference[k]) << "," << fmt(fit.cosine_fit[k]) << ","
               << fmt(fit.fourier_fit[k]) << "\n";
  }
  summary << "cosine_endpoint_error=" << fmt(fit.cosine_endpoint_error)
          << " fourier_endpoint_error=" << fmt(fit.fourier_endpoint_error) << "\n";
  return kOk;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourier-series trajectory optimization", "harmonic-planner"};
  app.require_subcommand(1);

  TrainFieldOptions train;
  auto* train_cmd = app.add_subcommand("train-field", "train the SVM collision field for a scene");
  train_cmd->add_option("--robot", train.robot, "robot model file")->required();
  train_cmd->add_option("--scene", train.scene, "scene file")->required();
  train_cmd->add_option("--out", train.out, "model file to write");
  train_cmd->add_option("-n,--points", train.points, "labeled points");
  train_cmd->add_option("--sigma", train.sigma, "kernel width in meters (0: heuristic)");
  train_cmd->add_option("--cbox", train.c_box, "box constant");
  train_cmd->add_option("--epsilon", train.epsilon, "collision buffer in meters");
  train_cmd->add_option("--seed", train.seed);

  std::string problem_path, plan_out;
  PlanOverrides overrides;
  auto* plan_cmd = app.add_subcommand("plan", "optimize one problem file");
  plan_cmd->add_option("problem", problem_path, "problem file")->required();
  plan_cmd->add_option("--out", plan_out, "trajectory CSV (default: stdout)");
  plan_cmd->add_option("--rho", overrides.rho);
  plan_cmd->add_option("--lambda", overrides.lambda);
  plan_cmd->add_option("--alpha", overrides.alpha);
  plan_cmd->add_option("--beta", overrides.beta);
  plan_cmd->add_option("--step-tol", overrides.step_tol);
  plan_cmd->add_option("--margin", overrides.margin, "planning buffer added to epsilon");
  plan_cmd->add_option("--max-iter", overrides.max_iter);
  plan_cmd->add_option("--field", overrides.field, "raw or svm");
  plan_cmd->add_option("--model", overrides.model, "trained field model");

  BenchCliOptions bench_opts;
  std::optional<double> bench_lambda, bench_alpha;
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
  bench_cmd->add_option("suite", bench_opts.suite, "suite file")->required();
  bench_cmd->add_option("--mode", bench_opts.mode, "aip, ffsomp or both");
  bench_cmd->add_option("--out", bench_opts.out, "results CSV");
  bench_cmd->add_option("--lambda", bench_lambda);
  bench_cmd->add_option("--alpha", bench_alpha, "EMA weight, applied to both alpha and beta");
  bench_cmd->add_option("--threads", bench_opts.bench.threads, "workers (capped by HP_THREADS)");
  bench_cmd->add_option("--time-limit", bench_opts.bench.time_limit_s, "seconds per run");

  DemoOptions demo;
  auto* demo_cmd = app.add_subcommand("demo-ffs", "cosine vs full-Fourier fit of a start-goal motion");
  demo_cmd->add_option("--N", demo.harmonics);
  demo_cmd->add_option("--T", demo.period);
  demo_cmd->add_option("--reference", demo.reference, "ramp, step or constant");
  demo_cmd->add_option("--out", demo.out, "CSV file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }

  try {
    if (*train_cmd) return train_field(train, out, err);
    if (*plan_cmd) return plan(problem_path, plan_out, overrides, out, err);
    if (*bench_cmd) {
      bench_opts.bench.lambda = bench_lambda;
      bench_opts.bench.alpha = bench_alpha;
      return bench(bench_opts, out, err);
    }
    return demo_ffs(demo, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }
}

}  // namespace hp::cli

#pragma once

// Benchmark harness: runs every suite problem for every repeat in one of two
// modes and reduces success rate and timing per task class.
//
//   aip    - optimizer on the analytic SDF cost
//   ffsomp - optimizer on an SVM field trained for the problem's scene;
//            repeat r trains with seed (problem seed + r)
//
// Training time is not part of the reported plan time.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "hp/aip.hpp"
#include "hp/problem_io.hpp"
#include "hp/svm_field.hpp"

namespace hp {

enum class BenchMode { aip, ffsomp };

inline const char* to_string(BenchMode mode) { return mode == BenchMode::aip ? "aip" : "ffsomp"; }

struct FieldTraining {
  std::size_t points = 20000;  // labeled points per scene (configurations x balls)
  double c_box = 10.0;
  double sigma = 0.15;  // meters; <= 0 selects the nearest-neighbor default
};

struct BenchOptions {
  std::optional<double> lambda;
  std::optional<double> alpha;  // also applied to beta
  double time_limit_s = 30.0;
  int threads = 0;  // <= 0: hardware concurrency capped by HP_THREADS
  FieldTraining training{};
};

struct BenchRun {
  std::size_t problem = 0;
  char task_class = 'C';
  BenchMode mode = BenchMode::aip;
  int repeat = 0;
  bool success = false;
  bool feasible = false;
  bool timed_out = false;
  int iterations = 0;
  double time_s = 0.0;
  double max_endpoint_error = 0.0;   // over the initial and every accepted iterate
  double max_limit_violation = 0.0;
  FeasibilityReport audit;
  AmplitudeMatrix amplitudes{0, 0};  // final iterate
};

struct ClassSummary {
  char task_class;
  BenchMode mode;
  int runs = 0;
  double success_rate = 0.0;  // percent
  double mean_time_s = 0.0;
  double std_time_s = 0.0;
};

/// Worker count: HP_THREADS (when set and positive) caps the hardware concurrency.
inline int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("HP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(n, 1);
}

/// Runs `task(i)` for i in [0, count) on a pool of workers.
template <typename Task>
void parallel_for(std::size_t count, int workers, Task&& task) {
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) task(i);
  };
  const int extra = std::min<int>(workers, static_cast<int>(count)) - 1;
  std::vector<std::thread> pool;
  for (int w = 0; w < extra; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

/// Trains the field used by ffsomp mode for one problem and seed.
inline TrainResult train_scene_field(const ProblemFile& pf, std::uint64_t seed, const FieldTraining& training) {
  DatasetParams data;
  const std::size_t balls = std::max<std::size_t>(1, pf.problem.robot.balls().size());
  data.n_samples = std::max<std::size_t>(1, training.points / balls);
  data.epsilon = pf.problem.cost.epsilon;
  data.seed = seed;
  SvmHyper hyper;
  hyper.c_box = training.c_box;
  hyper.sigma = training.sigma;
  hyper.seed = seed;
  return train_smo(generate_dataset(pf.problem.robot, pf.problem.scene, data), hyper);
}

inline std::vector<BenchRun> run_benchmark(const BenchmarkSuite& suite, BenchMode mode, const BenchOptions& opts) {
  const int workers = worker_count(opts.threads);
  const auto repeats = static_cast<std::size_t>(suite.repeats);

  // one model per (robot, scene, epsilon, seed), shared across problems
  using ModelKey = std::tuple<std::string, std::string, double, std::uint64_t>;
  std::map<ModelKey, std::optional<CollisionFieldModel>> models;
  const auto key_of = [&](const ProblemFile& pf, std::size_t r) {
    return ModelKey{pf.robot_path.string(), pf.scene_path.string(), pf.problem.cost.epsilon, pf.seed + r};
  };
  if (mode == BenchMode::ffsomp) {
    std::vector<std::pair<ModelKey, const ProblemFile*>> jobs;
    for (const auto& entry : suite.entries) {
      for (std::size_t r = 0; r < repeats; ++r) {
        const ModelKey key = key_of(entry.problem, r);
        if (models.emplace(key, std::nullopt).second) jobs.emplace_back(key, &entry.problem);
      }
    }
    std::mutex lock;
    parallel_for(jobs.size(), workers, [&](std::size_t j) {
      TrainResult trained = train_scene_field(*jobs[j].second, std::get<3>(jobs[j].first), opts.training);
      const std::lock_guard<std::mutex> guard(lock);
      models.at(jobs[j].first).emplace(std::move(trained.model));
    });
  }

  std::vector<BenchRun> runs(suite.entries.size() * repeats);
  parallel_for(runs.size(), workers, [&](std::size_t k) {
    const std::size_t p = k / repeats;
    const std::size_t r = k % repeats;
    const ProblemFile& pf = suite.entries[p].problem;
    AipParams params = pf.params;
    params.field_source = mode == BenchMode::aip ? FieldSource::raw_sdf : FieldSource::learned_svm;
    if (opts.lambda) params.lambda = *opts.lambda;
    if (opts.alpha) params.alpha = params.beta = *opts.alpha;
    params.time_limit_s = opts.time_limit_s;
    const CollisionFieldModel* model = nullptr;
    if (mode == BenchMode::ffsomp) model = &*models.at(key_of(pf, r));

    const PlanResult result = optimize(pf.problem, params, model);
    BenchRun run;
    run.problem = p;
    run.task_class = suite.entries[p].task_class;
    run.mode = mode;
    run.repeat = static_cast<int>(r);
    run.success = result.feasible && !result.timed_out;
    run.feasible = result.feasible;
    run.timed_out = result.timed_out;
    run.iterations = result.iterations;
    run.time_s = result.wall_time_s;
    run.audit = result.audit;
    run.amplitudes = result.amplitudes;
    const AmplitudeMatrix init = initial_amplitudes(pf.problem);
    run.max_endpoint_error = endpoint_error(pf.problem, init);
    run.max_limit_violation = limit_violation(pf.problem, init);
    for (const TraceEntry& e : result.trace) {
      run.max_endpoint_error = std::max(run.max_endpoint_error, e.endpoint_error);
      run.max_limit_violation = std::max(run.max_limit_violation, e.limit_violation);
    }
    runs[k] = run;
  });
  return runs;
}

/// Per (class, mode) success rate and timing, classes in A, B, C order.
inline std::vector<ClassSummary> summarize(const std::vector<BenchRun>& runs) {
  std::vector<ClassSummary> out;
  for (BenchMode mode : {BenchMode::aip, BenchMode::ffsomp}) {
    for (char cls : {'A', 'B', 'C'}) {
      ClassSummary s{cls, mode};
      double sum = 0.0, sum_sq = 0.0;
      int successes = 0;
      for (const BenchRun& run : runs) {
        if (run.task_class != cls || run.mode != mode) continue;
        ++s.runs;
        successes += run.success ? 1 : 0;
        sum += run.time_s;
        sum_sq += run.time_s * run.time_s;
      }
      if (s.runs == 0) continue;
      s.success_rate = 100.0 * successes / s.runs;
      s.mean_time_s = sum / s.runs;
      s.std_time_s = std::sqrt(std::max(0.0, sum_sq / s.runs - s.mean_time_s * s.mean_time_s));
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace hp

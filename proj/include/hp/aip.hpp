#pragma once

// Adaptive interior-point (AIP) trajectory optimization over cosine amplitudes.
//
// Each iteration linearizes the per-sample potentials f(a) ~ f + F da, smooths
// f and F with bias-corrected exponential moving averages and solves
//
//   min  da'(rho K + F'F + lambda I) da + 2 (rho a'K + f'F) da
//   s.t. C_0 da = start - C_0 a,  C_{T/2} da = goal - C_{T/2} a,
//        theta_min <= C_t (a + da) <= theta_max  for every sample t
//
// with the interior-point QP solver, until |da| <= step_tol.

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hp/collision_field.hpp"
#include "hp/ffs_trajectory.hpp"
#include "hp/hamiltonian.hpp"
#include "hp/qp.hpp"
#include "hp/robot_model.hpp"
#include "hp/scene.hpp"
#include "hp/svm_field.hpp"

namespace hp {

struct AipParams {
  double alpha = 0.90;   // EMA weight of the newest residual vector f
  double beta = 0.90;    // EMA weight of the newest Jacobian F
  double lambda = 1e-2;  // isotropic damping, Lambda = lambda I
  double rho = 0.1;
  double step_tol = 1e-3;
  int max_iter = 100;
  FieldSource field_source = FieldSource::raw_sdf;
  PotentialOptions potential{};
  QpOptions qp{};
  double time_limit_s = std::numeric_limits<double>::infinity();
  // extra buffer added to epsilon while planning; the audit uses epsilon alone
  double margin = 0.02;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0)) {
      throw std::domain_error("AipParams: alpha and beta must lie in (0, 1]");
    }
    if (!(lambda > 0.0)) throw std::domain_error("AipParams: lambda must be positive");
    if (!(rho >= 0.0)) throw std::domain_error("AipParams: rho must be non-negative");
    if (!(step_tol > 0.0)) throw std::domain_error("AipParams: step_tol must be positive");
    if (max_iter < 1) throw std::domain_error("AipParams: max_iter must be >= 1");
    if (!(margin >= 0.0)) throw std::domain_error("AipParams: margin must be non-negative");
  }
};

struct PlanProblem {
  RobotModel robot;
  Scene scene;
  CostParams cost;
  Vec start;
  Vec goal;
  SampleGrid grid;
  Index harmonics;

  void validate() const {
    if (start.size() != robot.dof() || goal.size() != robot.dof()) {
      throw std::domain_error("PlanProblem: start/goal must have one entry per joint");
    }
    const auto strictly_inside = [&](const Vec& q) {
      return (q.array() > robot.limits().min.array()).all() && (q.array() < robot.limits().max.array()).all();
    };
    if (!strictly_inside(start) || !strictly_inside(goal)) {
      throw std::domain_error("PlanProblem: start and goal must lie strictly within the joint limits");
    }
    if (harmonics < 1) throw std::domain_error("PlanProblem: need at least one harmonic");
    if (!(cost.epsilon > 0.0)) throw std::domain_error("PlanProblem: epsilon must be positive");
  }
};

/// hist' = (1 - decay) hist + decay fresh
template <typename Derived, typename Other>
typename Derived::PlainObject ema_update(const Eigen::MatrixBase<Derived>& hist, const Eigen::MatrixBase<Other>& fresh,
                                         double decay) {
  if (hist.rows() != fresh.rows() || hist.cols() != fresh.cols()) {
    throw std::domain_error("ema_update: shape mismatch");
  }
  return (1.0 - decay) * hist + decay * fresh;
}

/// hist / (1 - (1 - decay)^i), i >= 1
template <typename Derived>
typename Derived::PlainObject bias_correct(const Eigen::MatrixBase<Derived>& hist, double decay, int i) {
  if (i < 1) throw std::domain_error("bias_correct: iteration index must be >= 1");
  const double denom = 1.0 - std::pow(1.0 - decay, i);
  if (!(denom > 0.0)) throw std::domain_error("bias_correct: zero correction denominator");
  return hist / denom;
}

/// The interior-point subproblem in da around the current amplitudes.
inline QpProblem build_model(const AmplitudeMatrix& a, const Vec& f_hat, const Mat& F_hat, const AipParams& params,
                             const PlanProblem& problem) {
  const Index joints = a.joints();
  const Index harmonics = a.harmonics();
  const Index n = a.flat_size();
  if (F_hat.cols() != n || F_hat.rows() != f_hat.size()) throw std::domain_error("build_model: shape mismatch");
  const Vec flat = a.flat();
  const Mat K = kinetic_hessian(joints, harmonics);

  QpProblem qp;
  qp.Q = 2.0 * (params.rho * K + F_hat.transpose() * F_hat);
  qp.Q.diagonal().array() += 2.0 * params.lambda;
  qp.Q = 0.5 * (qp.Q + qp.Q.transpose());
  qp.c = 2.0 * (params.rho * K * flat + F_hat.transpose() * f_hat);

  qp.Aeq = endpoint_rows(problem.grid, joints, harmonics);
  qp.beq.resize(2 * joints);
  qp.beq << problem.start, problem.goal;
  qp.beq -= qp.Aeq * flat;

  const Mat stack = basis_stack(problem.grid, joints, harmonics);
  const Vec waypoints = stack * flat;
  const Index rows = stack.rows();
  qp.Ain.resize(2 * rows, n);
  qp.Ain.topRows(rows) = stack;
  qp.Ain.bottomRows(rows) = -stack;
  qp.bin.resize(2 * rows);
  for (int t = 0; t < problem.grid.size(); ++t) {
    qp.bin.segment(t * joints, joints) = problem.robot.limits().max;
    qp.bin.segment(rows + t * joints, joints) = -problem.robot.limits().min;
  }
  qp.bin.head(rows) -= waypoints;
  qp.bin.tail(rows) += waypoints;
  return qp;
}

struct FeasibilityReport {
  bool collision_free = true;
  bool within_limits = true;
  int collision_violations = 0;  // (time, ball) pairs with nonzero cost
  int limit_violations = 0;
  double min_clearance = std::numeric_limits<double>::infinity();  // min d - epsilon
  bool feasible() const { return collision_free && within_limits; }
};

/// Checks the continuous trajectory at `oversample` x the sample rate,
/// including non-integer times, against the analytic scene and the limits.
inline FeasibilityReport audit_trajectory(const PlanProblem& problem, const AmplitudeMatrix& a, int oversample = 10,
                                          double limit_slack = 1e-8) {
  FeasibilityReport report;
  const int steps = oversample * problem.grid.half();
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / oversample;
    const Vec theta = evaluate(a, t, problem.grid);
    if (!within_limits(problem.robot, theta, limit_slack)) {
      report.within_limits = false;
      ++report.limit_violations;
    }
    for (const BallState& ball : forward_kinematics(problem.robot, theta)) {
      const double d = problem.scene.signed_distance(ball.center, ball.radius).distance;
      report.min_clearance = std::min(report.min_clearance, d - problem.cost.epsilon);
      if (collision_cost(d, problem.cost).cost > 0.0) {
        report.collision_free = false;
        ++report.collision_violations;
      }
    }
  }
  return report;
}

/// (sample, ball) pairs in contact or penetration (d <= 0) on the grid.
inline int count_colliding_samples(const PlanProblem& problem, const AmplitudeMatrix& a) {
  int count = 0;
  for (int t = 0; t <= problem.grid.half(); ++t) {
    for (const BallState& ball : forward_kinematics(problem.robot, evaluate(a, t, problem.grid))) {
      if (problem.scene.signed_distance(ball.center, ball.radius).distance <= 0.0) ++count;
    }
  }
  return count;
}

inline double max_penetration(const PlanProblem& problem, const AmplitudeMatrix& a) {
  double worst = 0.0;
  for (int t = 0; t <= problem.grid.half(); ++t) {
    for (const BallState& ball : forward_kinematics(problem.robot, evaluate(a, t, problem.grid))) {
      worst = std::max(worst, -problem.scene.signed_distance(ball.center, ball.radius).distance);
    }
  }
  return worst;
}

/// Start/goal residual max(|C_0 a - start|, |C_{T/2} a - goal|).
inline double endpoint_error(const PlanProblem& problem, const AmplitudeMatrix& a) {
  return std::max((evaluate(a, 0.0, problem.grid) - problem.start).norm(),
                  (evaluate(a, problem.grid.half(), problem.grid) - problem.goal).norm());
}

/// Largest excursion of a grid waypoint beyond the joint limits (0 if inside).
inline double limit_violation(const PlanProblem& problem, const AmplitudeMatrix& a) {
  const Mat w = discretize(a, problem.grid);
  double worst = 0.0;
  for (Index t = 0; t < w.rows(); ++t) {
    worst = std::max(worst, (w.row(t).transpose() - problem.robot.limits().max).maxCoeff());
    worst = std::max(worst, (problem.robot.limits().min - w.row(t).transpose()).maxCoeff());
  }
  return std::max(worst, 0.0);
}

/// Minimum-kinetic start; waypoints outside the limits are clipped strictly
/// inside and refit with the endpoints pinned.
inline AmplitudeMatrix initial_amplitudes(const PlanProblem& problem) {
  AmplitudeMatrix a = init_min_kinetic(problem.start, problem.goal, problem.harmonics, problem.grid);
  if (limit_violation(problem, a) == 0.0) return a;
  Mat w = discretize(a, problem.grid);
  const Vec& lo = problem.robot.limits().min;
  const Vec& hi = problem.robot.limits().max;
  const Vec margin = 1e-3 * (hi - lo);
  for (Index t = 0; t < w.rows(); ++t) {
    w.row(t) = w.row(t).transpose().cwiseMax(lo + margin).cwiseMin(hi - margin).transpose();
  }
  return fit_waypoints(w, problem.grid, problem.harmonics, true);
}

struct TraceEntry {
  int iteration;
  double hamiltonian;      // at the accepted iterate
  double step_norm;
  double max_penetration;  // max(-d) over grid samples and balls
  QpStatus qp_status;
  double endpoint_error;
  double limit_violation;
};

struct PlanResult {
  AmplitudeMatrix amplitudes = AmplitudeMatrix(1, 0);
  bool converged = false;
  int iterations = 0;
  bool feasible = false;
  bool timed_out = false;
  std::string abort_reason;
  FeasibilityReport audit;
  double initial_hamiltonian = 0.0;
  double final_hamiltonian = 0.0;
  double wall_time_s = 0.0;
  std::vector<TraceEntry> trace;
};

inline std::unique_ptr<CollisionField> make_field(const PlanProblem& problem, FieldSource source,
                                                  const CollisionFieldModel* model, double margin = 0.0) {
  if (source == FieldSource::learned_svm) {
    if (model == nullptr) throw std::invalid_argument("optimize: the svm field needs a trained model");
    return std::make_unique<LearnedCollisionField>(*model);
  }
  return std::make_unique<SdfCollisionField>(problem.scene, CostParams{problem.cost.epsilon + margin});
}

inline PlanResult optimize(const PlanProblem& problem, const AipParams& params,
                           const CollisionFieldModel* model = nullptr) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - started).count(); };
  problem.validate();
  params.validate();

  const auto field = make_field(problem, params.field_source, model, params.margin);
  const PotentialContext ctx{problem.robot, *field, problem.grid, params.potential};

  PlanResult result;
  AmplitudeMatrix a = initial_amplitudes(problem);
  PotentialEval eval = potential_energy(a, ctx);
  result.initial_hamiltonian = params.rho * kinetic_energy(a) + eval.total;
  result.final_hamiltonian = result.initial_hamiltonian;

  Vec f_hist = Vec::Zero(eval.f.size());
  Mat F_hist = Mat::Zero(eval.F.rows(), eval.F.cols());
  for (int i = 1; i <= params.max_iter; ++i) {
    if (elapsed() > params.time_limit_s) {
      result.timed_out = true;
      break;
    }
    f_hist = ema_update(f_hist, eval.f, params.alpha);
    F_hist = ema_update(F_hist, eval.F, params.beta);
    const Vec f_hat = bias_correct(f_hist, params.alpha, i);
    const Mat F_hat = bias_correct(F_hist, params.beta, i);

    const QpSolution step = solve_qp(build_model(a, f_hat, F_hat, params, problem), params.qp);
    if (step.status == QpStatus::infeasible) {
      result.abort_reason = "interior-point subproblem infeasible";
      break;
    }
    Vec delta = step.x;
    if (step.status != QpStatus::optimal) {
      // an unconverged subproblem can leave constraint residuals; shorten the
      // step until the iterate keeps its endpoints and limits
      bool kept = false;
      for (int k = 0; k < 40 && !kept; ++k) {
        const auto trial = AmplitudeMatrix::from_flat(a.flat() + delta, a.joints(), a.harmonics());
        kept = endpoint_error(problem, trial) <= 1e-9 && limit_violation(problem, trial) <= 1e-9;
        if (!kept) delta *= 0.5;
      }
      if (!kept) {
        result.abort_reason = "interior-point subproblem stalled";
        break;
      }
    }
    a = AmplitudeMatrix::from_flat(a.flat() + delta, a.joints(), a.harmonics());
    eval = potential_energy(a, ctx);
    const double h = params.rho * kinetic_energy(a) + eval.total;
    const double step_norm = delta.norm();
    result.trace.push_back({i, h, step_norm, max_penetration(problem, a), step.status, endpoint_error(problem, a),
                            limit_violation(problem, a)});
    result.iterations = i;
    result.final_hamiltonian = h;
    if (step.x.norm() <= params.step_tol) {
      result.converged = true;
      break;
    }
  }
  result.amplitudes = a;
  result.audit = audit_trajectory(problem, a);
  result.feasible = result.audit.feasible();
  result.wall_time_s = elapsed();
  return result;
}

}  // namespace hp

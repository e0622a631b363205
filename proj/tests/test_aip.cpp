#include <random>

#include <gtest/gtest.h>

#include "hp/aip.hpp"
#include "test_util.hpp"

namespace hp {
namespace {

PlanProblem disc_problem() {
  // the minimum-kinetic sweep of the tip passes through the disc
  const Scene scene({Sphere{Vec3(1.98, 0, 0), 0.15}});
  return PlanProblem{testing::planar_two_link(), scene, CostParams{0.05}, Vec{{-1.2, 0.3}}, Vec{{1.2, 0.3}},
                     SampleGrid(100), 4};
}

AipParams disc_params() {
  // 1 m links make the kinetic term large against the hinge cost
  AipParams params;
  params.rho = 0.01;
  return params;
}

TEST(EmaUpdate, Examples) {
  const Vec hist = Vec{{1.0, -2.0}};
  const Vec fresh = Vec{{0.5, 4.0}};
  EXPECT_EQ(ema_update(hist, fresh, 1.0), fresh);
  EXPECT_EQ(ema_update(hist, hist, 0.3), hist);
  EXPECT_THROW(ema_update(hist, Vec::Zero(3), 0.5), std::domain_error);
}

TEST(EmaUpdate, GeometricApproachToConstantInput) {
  const double decay = 0.3;
  Vec hist = Vec::Zero(1);
  const Vec target = Vec::Constant(1, 2.0);
  for (int k = 1; k <= 30; ++k) {
    hist = ema_update(hist, target, decay);
    EXPECT_NEAR(target(0) - hist(0), std::pow(1 - decay, k) * 2.0, 1e-14);
  }
}

TEST(BiasCorrect, Examples) {
  const Mat first = ema_update(Mat::Zero(2, 2), Mat::Constant(2, 2, 3.0), 0.9);
  EXPECT_LT((bias_correct(first, 0.9, 1) - Mat::Constant(2, 2, 3.0)).norm(), 1e-14);
  EXPECT_NEAR(bias_correct(Vec::Constant(1, 5.0), 0.5, 60)(0), 5.0, 1e-14);
  EXPECT_THROW(bias_correct(Vec::Ones(1), 0.5, 0), std::domain_error);
}

TEST(BiasCorrect, ConstantStreamIsRecoveredAtEveryStep) {
  for (double decay : {0.1, 0.5, 0.9}) {
    Vec hist = Vec::Zero(3);
    const Vec x = Vec{{1.5, -0.2, 7.0}};
    for (int i = 1; i <= 50; ++i) {
      hist = ema_update(hist, x, decay);
      EXPECT_LT((bias_correct(hist, decay, i) - x).lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
}

TEST(BuildModel, MatchesGaussNewtonModel) {
  const PlanProblem problem = disc_problem();
  std::mt19937_64 rng(199);
  const AmplitudeMatrix a = initial_amplitudes(problem);
  const Index n = a.flat_size();
  const Vec f = testing::random_vector(rng, problem.grid.size(), 0, 1);
  const Mat F = Mat::NullaryExpr(problem.grid.size(), n, [&]() { return std::normal_distribution<double>()(rng); });
  AipParams params;
  params.rho = 0.3;
  const QpProblem qp = build_model(a, f, F, params, problem);

  const Mat K = kinetic_hessian(2, 4);
  const auto model = [&](const Vec& d) {
    const Vec next = a.flat() + d;
    return params.rho * next.dot(K * next) + (f + F * d).squaredNorm() + params.lambda * d.squaredNorm();
  };
  for (int trial = 0; trial < 20; ++trial) {
    const Vec d = testing::random_vector(rng, n, -0.5, 0.5);
    EXPECT_NEAR(qp.objective(d) - qp.objective(Vec::Zero(n)), model(d) - model(Vec::Zero(n)),
                1e-9 * std::max(1.0, std::abs(model(d))));
  }
  // linear term is the model gradient at zero
  Vec fd(n);
  for (Index k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e(k) = 1e-6;
    fd(k) = (model(e) - model(-e)) / 2e-6;
  }
  EXPECT_LT((qp.c - fd).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(qp.Q).eigenvalues().minCoeff(), 0.0);
}

TEST(BuildModel, InequalitiesAreShiftedLimits) {
  const PlanProblem problem = disc_problem();
  const AmplitudeMatrix a = initial_amplitudes(problem);
  const QpProblem qp = build_model(a, Vec::Zero(problem.grid.size()), Mat::Zero(problem.grid.size(), a.flat_size()),
                                   AipParams{}, problem);
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec d = testing::random_vector(rng, a.flat_size(), -1.5, 1.5);
    const auto next = AmplitudeMatrix::from_flat(a.flat() + d, a.joints(), a.harmonics());
    EXPECT_EQ((qp.Ain * d - qp.bin).maxCoeff() <= 0.0, limit_violation(problem, next) == 0.0);
  }
  EXPECT_LT((qp.Aeq * Vec::Zero(a.flat_size()) - qp.beq).norm(), 1e-12);
}

TEST(BuildModel, StationaryKineticStartGivesZeroStep) {
  const PlanProblem problem = disc_problem();
  const AmplitudeMatrix a = init_min_kinetic(problem.start, problem.goal, problem.harmonics, problem.grid);
  const QpProblem qp = build_model(a, Vec::Zero(problem.grid.size()), Mat::Zero(problem.grid.size(), a.flat_size()),
                                   AipParams{}, problem);
  const QpSolution s = solve_qp(qp);
  EXPECT_EQ(s.status, QpStatus::optimal);
  EXPECT_LT(s.x.norm(), 1e-8);
}

TEST(Optimize, StationaryWhenStartEqualsGoal) {
  PlanProblem problem{testing::planar_two_link(), Scene(), CostParams{}, Vec{{0.4, -0.7}}, Vec{{0.4, -0.7}},
                      SampleGrid(20), 3};
  const PlanResult r = optimize(problem, AipParams{});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 2);
  EXPECT_TRUE(r.feasible);
  EXPECT_LT(r.amplitudes.matrix().rightCols(3).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LT((r.amplitudes.matrix().col(0) - problem.start).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Optimize, DetoursAroundDisc) {
  const PlanProblem problem = disc_problem();
  EXPECT_GT(count_colliding_samples(problem, initial_amplitudes(problem)), 0);
  EXPECT_FALSE(audit_trajectory(problem, initial_amplitudes(problem)).feasible());
  const PlanResult r = optimize(problem, disc_params());
  EXPECT_TRUE(r.feasible);
  EXPECT_LT(r.final_hamiltonian, r.initial_hamiltonian);
  ASSERT_FALSE(r.trace.empty());
  int non_increasing = 0;
  double previous = r.initial_hamiltonian;
  for (const TraceEntry& e : r.trace) {
    EXPECT_LE(e.endpoint_error, 1e-8);
    EXPECT_LE(e.limit_violation, 1e-8);
    non_increasing += e.hamiltonian <= previous ? 1 : 0;
    previous = e.hamiltonian;
  }
  EXPECT_GE(non_increasing, static_cast<int>(0.8 * static_cast<double>(r.trace.size())));
}

TEST(Optimize, IsDeterministic) {
  const PlanProblem problem = disc_problem();
  const PlanResult first = optimize(problem, disc_params());
  const PlanResult second = optimize(problem, disc_params());
  EXPECT_EQ(first.amplitudes.matrix(), second.amplitudes.matrix());
  EXPECT_EQ(first.iterations, second.iterations);
}

TEST(Optimize, LearnedFieldRunKeepsInvariants) {
  const PlanProblem problem = disc_problem();
  DatasetParams data;
  data.n_samples = 800;
  const CollisionFieldModel model = train_smo(generate_dataset(problem.robot, problem.scene, data), {}).model;
  AipParams params;
  params.field_source = FieldSource::learned_svm;
  EXPECT_THROW(optimize(problem, params), std::invalid_argument);
  const PlanResult r = optimize(problem, params, &model);
  for (const TraceEntry& e : r.trace) {
    EXPECT_LE(e.endpoint_error, 1e-8);
    EXPECT_LE(e.limit_violation, 1e-8);
  }
  EXPECT_EQ(r.feasible, audit_trajectory(problem, r.amplitudes).feasible());
}

TEST(Optimize, RespectsTimeLimit) {
  AipParams params;
  params.time_limit_s = 0.0;
  const PlanResult r = optimize(disc_problem(), params);
  EXPECT_TRUE(r.timed_out);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Optimize, RejectsInvalidInput) {
  PlanProblem problem = disc_problem();
  problem.start(0) = 3.0;  // on the limit
  EXPECT_THROW(optimize(problem, AipParams{}), std::domain_error);
  AipParams params;
  params.alpha = 0.0;
  EXPECT_THROW(optimize(disc_problem(), params), std::domain_error);
  params = AipParams{};
  params.lambda = 0.0;
  EXPECT_THROW(optimize(disc_problem(), params), std::domain_error);
  params = AipParams{};
  params.margin = -0.01;
  EXPECT_THROW(optimize(disc_problem(), params), std::domain_error);
}

TEST(Optimize, MarginWidensOnlyThePlanningBuffer) {
  const PlanProblem problem = disc_problem();
  const auto field = make_field(problem, FieldSource::raw_sdf, nullptr, 0.02);
  const SdfCollisionField wide(problem.scene, CostParams{problem.cost.epsilon + 0.02});
  for (const Vec3& p : {Vec3(1.98, 0.2, 0.0), Vec3(1.98, 0.26, 0.0), Vec3(2.0, 0.0, 0.0), Vec3(0.5, 0.5, 0.0)}) {
    EXPECT_DOUBLE_EQ(field->cost(p, 0.05), wide.cost(p, 0.05));
  }
  AipParams params = disc_params();
  params.margin = 0.05;
  const PlanResult r = optimize(problem, params);
  EXPECT_TRUE(r.feasible);
  EXPECT_GE(r.audit.min_clearance, 0.0);
  EXPECT_EQ(r.audit.collision_violations, audit_trajectory(problem, r.amplitudes).collision_violations);
}

TEST(Audit, FlagsCollisionsBetweenSamples) {
  // a thin wall crossed between two grid samples is still caught
  const Scene scene({Box{Vec3(-3, 0.29, -1), Vec3(3, 0.31, 1)}});
  PlanProblem problem{RobotModel({{Vec3::UnitZ(), Vec3::Zero()}}, {Vec::Constant(1, -3.0), Vec::Constant(1, 3.0)},
                                 {{0, Vec3(1, 0, 0), 0.001}}),
                      scene, CostParams{0.001}, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), SampleGrid(8), 1};
  const AmplitudeMatrix a = initial_amplitudes(problem);
  EXPECT_EQ(count_colliding_samples(problem, a), 0);
  const FeasibilityReport report = audit_trajectory(problem, a);
  EXPECT_FALSE(report.collision_free);
  EXPECT_TRUE(report.within_limits);
}

}  // namespace
}  // namespace hp

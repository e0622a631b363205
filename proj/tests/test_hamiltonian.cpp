#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hp/collision_field.hpp"
#include "hp/hamiltonian.hpp"
#include "test_util.hpp"

namespace hp {
namespace {

constexpr double kPi = std::numbers::pi;

class ConstantField final : public CollisionField {
 public:
  explicit ConstantField(double c) : c_(c) {}
  double cost(const Vec3&, double) const override { return c_; }
  Vec3 cost_gradient(const Vec3&, double) const override { return Vec3::Zero(); }

 private:
  double c_;
};

RobotModel single_link(double length) {
  return RobotModel({{Vec3::UnitZ(), Vec3::Zero()}}, {Vec::Constant(1, -3.0), Vec::Constant(1, 3.0)},
                    {{0, Vec3(length, 0, 0), 0.05}});
}

AmplitudeMatrix random_state(std::mt19937_64& rng, Index joints, Index harmonics) {
  Mat m = testing::random_amplitudes(rng, joints, harmonics, 0.5).matrix();
  m.col(0) = testing::random_vector(rng, joints, -2.0, 2.0);
  return AmplitudeMatrix(m);
}

TEST(SamplePotential, OutsideEveryBufferIsZero) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene({Sphere{Vec3(10, 10, 10), 0.5}});
  const SdfCollisionField field(scene, CostParams{});
  const PotentialContext ctx{robot, field, SampleGrid(20)};
  std::mt19937_64 rng(139);
  const AmplitudeMatrix a = random_state(rng, robot.dof(), 3);
  for (int t = 0; t <= 10; ++t) {
    EXPECT_EQ(sample_potential(a, t, ctx).value, 0.0);
    EXPECT_EQ(sample_potential_gradient(a, t, ctx), Vec::Zero(a.flat_size()));
  }
}

TEST(SamplePotential, CostTimesSpeed) {
  // theta(tau) = 2 cos(tau); at tau = pi/2 the tip of a 1 m link moves at 2
  const RobotModel robot = single_link(1.0);
  const ConstantField field(0.3);
  const PotentialContext ctx{robot, field, SampleGrid(40)};
  const AmplitudeMatrix a((Mat(1, 2) << 0.0, 2.0).finished());
  EXPECT_NEAR(sample_potential(a, 10, ctx).value, 0.6, 1e-12);
  // endpoints are at rest, so the floor applies
  EXPECT_NEAR(sample_potential(a, 0, ctx).value, 0.3 * 1e-6, 1e-18);
}

TEST(SamplePotential, PositionNormVariant) {
  const RobotModel robot = single_link(1.5);
  const ConstantField field(0.3);
  PotentialContext ctx{robot, field, SampleGrid(40)};
  ctx.options.weight = WeightMode::position_norm;
  const AmplitudeMatrix a((Mat(1, 2) << 0.0, 2.0).finished());
  EXPECT_NEAR(sample_potential(a, 7, ctx).value, 0.45, 1e-12);
}

TEST(SamplePotential, MaxEqualsBruteForceOverBalls) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const CostParams cost{0.05};
  const SdfCollisionField field(scene, cost);
  const SampleGrid grid(32);
  const PotentialContext ctx{robot, field, grid};
  std::mt19937_64 rng(149);
  std::uniform_int_distribution<int> sample(1, grid.half() - 1);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const AmplitudeMatrix a = random_state(rng, robot.dof(), 4);
    const int t = sample(rng);
    // ball velocity from differences of forward kinematics along the phase
    const double dt = h * grid.period() / (2 * kPi);
    const auto now = forward_kinematics(robot, evaluate(a, t, grid));
    const auto ahead = forward_kinematics(robot, evaluate(a, t + dt, grid.period()));
    const auto behind = forward_kinematics(robot, evaluate(a, t - dt, grid.period()));
    double best = 0.0;
    int best_ball = 0;
    for (std::size_t i = 0; i < now.size(); ++i) {
      const double c = collision_cost(scene.signed_distance(now[i].center, now[i].radius).distance, cost).cost;
      const double speed = ((ahead[i].center - behind[i].center) / (2 * h)).norm();
      const double v = c * std::max(speed, 1e-6);
      if (v > best) {
        best = v;
        best_ball = static_cast<int>(i);
      }
    }
    const SamplePotential sp = sample_potential(a, t, ctx);
    EXPECT_NEAR(sp.value, best, 1e-6 * std::max(1.0, best));
    if (best > 0.0) {
      EXPECT_EQ(sp.ball, best_ball);
    }
  }
}

TEST(SamplePotential, TiesGoToLowestBall) {
  const RobotModel robot({{Vec3::UnitZ(), Vec3::Zero()}}, {Vec::Constant(1, -3.0), Vec::Constant(1, 3.0)},
                         {{0, Vec3(0, 0, 1), 0.05}, {0, Vec3(0, 0, 1), 0.05}});
  const ConstantField field(1.0);
  const PotentialContext ctx{robot, field, SampleGrid(10)};
  EXPECT_EQ(sample_potential(AmplitudeMatrix(1, 2), 3, ctx).ball, 0);
}

TEST(SampleGradient, MatchesFrozenArgmaxDifferencesRawField) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField field(scene, CostParams{0.05});
  const SampleGrid grid(32);
  const PotentialContext ctx{robot, field, grid};
  std::mt19937_64 rng(151);
  std::uniform_int_distribution<int> sample(1, grid.half() - 1);
  int checked = 0;
  for (int trial = 0; trial < 20000 && checked < 200; ++trial) {
    const auto err = testing::frozen_ball_gradient_error(random_state(rng, robot.dof(), 4), sample(rng), ctx, 1e-4);
    if (!err) continue;
    ++checked;
    EXPECT_LE(*err, 1e-3);
  }
  EXPECT_EQ(checked, 200);
}

TEST(SampleGradient, MatchesFrozenArgmaxDifferencesLearnedField) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  DatasetParams data;
  data.n_samples = 400;
  const CollisionFieldModel model = train_smo(generate_dataset(robot, scene, data), {}).model;
  const LearnedCollisionField field(model);
  const SampleGrid grid(32);
  const PotentialContext ctx{robot, field, grid};
  std::mt19937_64 rng(157);
  std::uniform_int_distribution<int> sample(1, grid.half() - 1);
  int checked = 0;
  for (int trial = 0; trial < 20000 && checked < 200; ++trial) {
    const auto err = testing::frozen_ball_gradient_error(random_state(rng, robot.dof(), 4), sample(rng), ctx, 1e-4);
    if (!err) continue;
    ++checked;
    EXPECT_LE(*err, 1e-3);
  }
  EXPECT_EQ(checked, 200);
}

TEST(SampleGradient, PositionNormVariantMatchesDifferences) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField field(scene, CostParams{0.05});
  PotentialContext ctx{robot, field, SampleGrid(24)};
  ctx.options.weight = WeightMode::position_norm;
  std::mt19937_64 rng(163);
  int checked = 0;
  for (int trial = 0; trial < 20000 && checked < 50; ++trial) {
    const auto err = testing::frozen_ball_gradient_error(random_state(rng, robot.dof(), 3), 1 + trial % 11, ctx, 1e-4);
    if (!err) continue;
    ++checked;
    EXPECT_LE(*err, 1e-3);
  }
  EXPECT_EQ(checked, 50);
}

TEST(FunctionalBracket, OrthogonalToVelocity) {
  std::mt19937_64 rng(167);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 xdot = testing::random_vector(rng, 3, -2, 2);
    const Vec3 xddot = testing::random_vector(rng, 3, -5, 5);
    const Vec3 dc = testing::random_vector(rng, 3, -1, 1);
    const Vec3 b = functional_bracket(xdot, xddot, 0.7, dc, 1e-6);
    EXPECT_LT(std::abs(b.dot(xdot)), 1e-8);
  }
  // at rest the curvature part is dropped
  EXPECT_EQ(functional_bracket(Vec3::Zero(), Vec3::Ones(), 1.0, Vec3(0.2, 0, 0), 1e-6), Vec3(0.2, 0, 0));
}

TEST(FunctionalGradient, MatchesHandAssembly) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField field(scene, CostParams{0.05});
  const SampleGrid grid(20);
  const PotentialContext ctx{robot, field, grid};
  std::mt19937_64 rng(173);
  int checked = 0;
  for (int trial = 0; trial < 5000 && checked < 30; ++trial) {
    const AmplitudeMatrix a = random_state(rng, robot.dof(), 3);
    const int t = 1 + trial % 9;
    const SamplePotential sp = sample_potential(a, t, ctx);
    if (sp.value == 0.0) continue;
    ++checked;
    const double tau = 2 * kPi * t / grid.period();
    const Vec theta = evaluate(a, t, grid);
    Vec rate = Vec::Zero(a.joints()), accel = Vec::Zero(a.joints());
    for (Index n = 1; n <= a.harmonics(); ++n) {
      rate -= a.matrix().col(n) * (n * std::sin(n * tau));
      accel -= a.matrix().col(n) * (n * n * std::cos(n * tau));
    }
    const BallState ball = forward_kinematics(robot, theta)[static_cast<std::size_t>(sp.ball)];
    const SceneDistance d = scene.signed_distance(ball.center, ball.radius);
    const double c = 0.05 - d.distance;
    const Vec3 xdot = ball.jacobian * rate;
    const Vec3 u = xdot.normalized();
    const Mat3 proj = Mat3::Identity() - u * u.transpose();
    const Vec3 bracket = proj * (-d.gradient) - c * proj * (ball.jacobian * accel) / xdot.squaredNorm();
    const Vec workspace = ball.jacobian.transpose() * (xdot.norm() * bracket) / 11.0;
    Vec expected(a.flat_size());
    for (Index m = 0; m < a.joints(); ++m) {
      for (Index n = 0; n <= a.harmonics(); ++n) expected(m * (a.harmonics() + 1) + n) = workspace(m) * std::cos(n * tau);
    }
    EXPECT_LT((sample_functional_gradient(a, t, ctx) - expected).norm(), 1e-10 * std::max(1.0, expected.norm()));
  }
  EXPECT_EQ(checked, 30);
}

TEST(PotentialEnergy, SumOfSquaresOfSamples) {
  // one ball at the tip of a 1 m link; f_t = c * |2 sin(tau_t)| except at rest
  const RobotModel robot = single_link(1.0);
  const ConstantField field(0.25);
  const SampleGrid grid(12);
  const PotentialContext ctx{robot, field, grid};
  const AmplitudeMatrix a((Mat(1, 3) << 0.1, 2.0, 0.0).finished());
  const PotentialEval eval = potential_energy(a, ctx);
  double expected = 0.0;
  for (int t = 0; t <= 6; ++t) {
    const double f = 0.25 * std::max(std::abs(2 * std::sin(2 * kPi * t / 12)), 1e-6);
    EXPECT_NEAR(eval.f(t), f, 1e-12);
    expected += f * f;
  }
  EXPECT_NEAR(eval.total, expected, 1e-12);
  EXPECT_DOUBLE_EQ(eval.total, eval.f.squaredNorm());
}

TEST(PotentialEnergy, MatchesPerSampleLoop) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField field(scene, CostParams{0.05});
  const SampleGrid grid(24);
  const PotentialContext ctx{robot, field, grid};
  std::mt19937_64 rng(179);
  for (int trial = 0; trial < 20; ++trial) {
    const AmplitudeMatrix a = random_state(rng, robot.dof(), 4);
    const PotentialEval eval = potential_energy(a, ctx);
    double total = 0.0;
    for (int t = 0; t <= grid.half(); ++t) {
      const SamplePotential sp = sample_potential(a, t, ctx);
      total += sp.value * sp.value;
      EXPECT_EQ(eval.argmax_ball[static_cast<std::size_t>(t)], sp.ball);
      EXPECT_GE(eval.f(t), 0.0);
      if (sp.value == 0.0) {
        EXPECT_EQ(eval.F.row(t).norm(), 0.0);
      }
    }
    EXPECT_NEAR(eval.total, total, 1e-12 * std::max(1.0, total));
  }
}

TEST(PotentialEnergy, CollisionFreeIsZero) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene;
  const SdfCollisionField field(scene, CostParams{});
  std::mt19937_64 rng(181);
  const PotentialEval eval = potential_energy(random_state(rng, robot.dof(), 3), {robot, field, SampleGrid(16)});
  EXPECT_EQ(eval.total, 0.0);
  EXPECT_EQ(eval.F.norm(), 0.0);
}

TEST(Hamiltonian, Composition) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField field(scene, CostParams{0.05});
  const PotentialContext ctx{robot, field, SampleGrid(24)};
  std::mt19937_64 rng(191);
  for (int trial = 0; trial < 20; ++trial) {
    const AmplitudeMatrix a = random_state(rng, robot.dof(), 4);
    const double potential = potential_energy(a, ctx).total;
    EXPECT_DOUBLE_EQ(hamiltonian(a, 0.0, ctx), potential);
    EXPECT_NEAR(hamiltonian(a, 1.0, ctx), testing::simpson_kinetic(a, 2000) + potential, 1e-8);
  }
  const Scene empty;
  const SdfCollisionField free_field(empty, CostParams{});
  Mat dc = Mat::Zero(robot.dof(), 4);
  dc.col(0).setConstant(0.3);
  EXPECT_EQ(hamiltonian(AmplitudeMatrix(dc), 0.1, {robot, free_field, SampleGrid(24)}), 0.0);
}

TEST(Hamiltonian, ZeroHarmonicPaddingIsInvariant) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField field(scene, CostParams{0.05});
  const PotentialContext ctx{robot, field, SampleGrid(24)};
  std::mt19937_64 rng(193);
  for (int trial = 0; trial < 20; ++trial) {
    const AmplitudeMatrix a = random_state(rng, robot.dof(), 3);
    Mat padded = Mat::Zero(a.joints(), 5);
    padded.leftCols(4) = a.matrix();
    EXPECT_NEAR(hamiltonian(AmplitudeMatrix(padded), 0.1, ctx), hamiltonian(a, 0.1, ctx), 1e-12);
  }
}

TEST(SamplePotential, LargerBufferNeverLowersPotential) {
  const RobotModel robot = testing::spatial_chain();
  const Scene scene = testing::cluttered_scene();
  const SdfCollisionField tight(scene, CostParams{0.02});
  const SdfCollisionField wide(scene, CostParams{0.08});
  const SampleGrid grid(24);
  std::mt19937_64 rng(197);
  for (int trial = 0; trial < 100; ++trial) {
    const AmplitudeMatrix a = random_state(rng, robot.dof(), 3);
    const int t = trial % 13;
    EXPECT_LE(sample_potential(a, t, {robot, tight, grid}).value, sample_potential(a, t, {robot, wide, grid}).value);
  }
}

}  // namespace
}  // namespace hp

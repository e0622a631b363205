#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hp/robot_model.hpp"
#include "test_util.hpp"

namespace hp {
namespace {

TEST(ForwardKinematics, PlanarArmStraightPose) {
  const auto balls = forward_kinematics(testing::planar_two_link(), Vec::Zero(2));
  ASSERT_EQ(balls.size(), 2u);
  EXPECT_LT((balls[0].center - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((balls[1].center - Vec3(2, 0, 0)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(balls[1].radius, 0.05);
}

TEST(ForwardKinematics, PlanarArmRotatedBase) {
  const auto balls = forward_kinematics(testing::planar_two_link(), Vec{{std::numbers::pi / 2, 0.0}});
  EXPECT_LT((balls[0].center - Vec3(0, 1, 0)).norm(), 1e-15);
  EXPECT_LT((balls[1].center - Vec3(0, 2, 0)).norm(), 1e-15);
}

TEST(ForwardKinematics, JacobianMatchesCentralDifferences) {
  const RobotModel robot = testing::spatial_chain();
  std::mt19937_64 rng(41);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec theta = testing::random_vector(rng, robot.dof(), -2.5, 2.5);
    const auto balls = forward_kinematics(robot, theta);
    for (Index j = 0; j < robot.dof(); ++j) {
      Vec plus = theta, minus = theta;
      plus(j) += h;
      minus(j) -= h;
      const auto bp = forward_kinematics(robot, plus);
      const auto bm = forward_kinematics(robot, minus);
      for (std::size_t i = 0; i < balls.size(); ++i) {
        const Vec3 fd = (bp[i].center - bm[i].center) / (2 * h);
        worst = std::max(worst, (fd - balls[i].jacobian.col(j)).lpNorm<Eigen::Infinity>());
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(ForwardKinematics, DownstreamColumnsAreZero) {
  const RobotModel robot = testing::spatial_chain();
  std::mt19937_64 rng(43);
  const auto balls = forward_kinematics(robot, testing::random_vector(rng, robot.dof(), -1, 1));
  for (std::size_t i = 0; i < balls.size(); ++i) {
    for (Index j = robot.balls()[i].parent + 1; j < robot.dof(); ++j) {
      EXPECT_EQ(balls[i].jacobian.col(j).norm(), 0.0);
    }
  }
}

TEST(ForwardKinematics, BaseRotationPreservesBallNorms) {
  // joint 0 rotates about the world z axis through the origin
  const RobotModel robot = testing::spatial_chain();
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    Vec theta = testing::random_vector(rng, robot.dof(), -2, 2);
    const auto before = forward_kinematics(robot, theta);
    theta(0) += 0.9;
    const auto after = forward_kinematics(robot, theta);
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_NEAR(before[i].center.norm(), after[i].center.norm(), 1e-12);
    }
  }
}

TEST(JacobianRate, MatchesDifferenceOfJacobianTimesVelocity) {
  const RobotModel robot = testing::spatial_chain();
  std::mt19937_64 rng(53);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const Vec theta = testing::random_vector(rng, robot.dof(), -2, 2);
    const Vec v = testing::random_vector(rng, robot.dof(), -1, 1);
    const ChainFrames frames = chain_frames(robot, theta);
    for (std::size_t i = 0; i < robot.balls().size(); ++i) {
      const Mat rate = jacobian_rate(robot, frames, ball_state(robot, frames, i), i, v);
      for (Index k = 0; k < robot.dof(); ++k) {
        Vec plus = theta, minus = theta;
        plus(k) += h;
        minus(k) -= h;
        const Vec3 fd = (forward_kinematics(robot, plus)[i].jacobian * v -
                         forward_kinematics(robot, minus)[i].jacobian * v) / (2 * h);
        EXPECT_LT((fd - rate.col(k)).lpNorm<Eigen::Infinity>(), 1e-6);
      }
    }
  }
}

TEST(WithinLimits, BoundaryInclusive) {
  const RobotModel robot = testing::planar_two_link();
  EXPECT_TRUE(within_limits(robot, robot.limits().min));
  EXPECT_TRUE(within_limits(robot, robot.limits().max));
  Vec over = robot.limits().max;
  over(0) += 1e-9;
  EXPECT_FALSE(within_limits(robot, over));
}

TEST(WithinLimits, AgreesWithComponentwiseOracle) {
  const RobotModel robot = testing::spatial_chain();
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec theta = testing::random_vector(rng, robot.dof(), -3.0, 3.0);
    bool inside = true;
    for (Index j = 0; j < theta.size(); ++j) {
      inside = inside && theta(j) >= robot.limits().min(j) && theta(j) <= robot.limits().max(j);
    }
    EXPECT_EQ(within_limits(robot, theta), inside);
  }
}

TEST(RobotModel, ValidatesInvariants) {
  std::vector<Joint> joints{{Vec3::UnitZ(), Vec3::Zero()}};
  EXPECT_THROW(RobotModel(joints, {Vec::Constant(1, 1.0), Vec::Constant(1, 1.0)}, {}), std::domain_error);
  EXPECT_THROW(RobotModel(joints, {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)}, {{1, Vec3::Zero(), 0.1}}),
               std::domain_error);
  EXPECT_THROW(RobotModel(joints, {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)}, {{0, Vec3::Zero(), 0.0}}),
               std::domain_error);
}

TEST(RobotModel, JsonReaderRejectsUnknownFields) {
  Json doc = {{"version", 1},
              {"joints", {{{"axis", {0, 0, 1}}, {"offset", {0, 0, 0}}}}},
              {"limits", {{"min", {-1}}, {"max", {1}}}},
              {"ccbs", {{{"parent", 0}, {"offset", {0.5, 0, 0}}, {"radius", 0.1}}}}};
  const RobotModel robot = RobotModel::from_json(doc);
  EXPECT_EQ(robot.dof(), 1);
  EXPECT_EQ(robot.balls().size(), 1u);

  Json extra = doc;
  extra["colour"] = "red";
  EXPECT_THROW(RobotModel::from_json(extra), IoError);
  Json bad_joint = doc;
  bad_joint["joints"][0]["type"] = "prismatic";
  EXPECT_THROW(RobotModel::from_json(bad_joint), IoError);
  Json bad_version = doc;
  bad_version["version"] = 2;
  EXPECT_THROW(RobotModel::from_json(bad_version), IoError);
  Json bad_limits = doc;
  bad_limits["limits"]["min"] = {-1, 0};
  EXPECT_THROW(RobotModel::from_json(bad_limits), IoError);
}

TEST(RobotModel, BundledConfigsLoad) {
  for (const char* name : {"planar2.json", "planar3.json", "spatial6.json"}) {
    const RobotModel robot = RobotModel::load(std::string(HP_ASSETS_DIR) + "/robots/" + name);
    EXPECT_GE(robot.balls().size(), 4u) << name;
    EXPECT_LE(robot.balls().size(), 12u) << name;
  }
}

}  // namespace
}  // namespace hp
